use std::fmt::Write as _;

use super::{Dataset, Frequency, Gender, Observation, TripChain};
use crate::mode::Mode;

#[derive(Debug, Clone, PartialEq)]
pub struct DetourStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1); zero for a single observation.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeGroupStats {
    pub mode: Mode,
    pub group: &'static str,
    pub count: usize,
    /// Share of the group's subsample choosing this mode, in percent.
    pub share_pct: Option<f64>,
    /// `None` when no observation falls in the cell.
    pub detour: Option<DetourStats>,
    pub remuneration: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownRow {
    /// `None` for the whole-sample rows.
    pub mode: Option<Mode>,
    pub group: &'static str,
    pub counts: Vec<usize>,
    /// `None` when the row has no observations.
    pub percents: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown {
    pub title: &'static str,
    pub levels: Vec<&'static str>,
    pub rows: Vec<BreakdownRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub sample_size: usize,
    pub groups: Vec<&'static str>,
    pub modes: Vec<ModeGroupStats>,
    pub trip_chain: Breakdown,
    pub frequency: Breakdown,
}

fn group_of(o: &Observation, by_gender: bool) -> &'static str {
    if by_gender {
        o.gender.as_str()
    } else {
        "all"
    }
}

pub fn summarize(d: &Dataset, by_gender: bool) -> SummaryReport {
    let groups: Vec<&'static str> = if by_gender {
        Gender::ALL.iter().map(|g| g.as_str()).collect()
    } else {
        vec!["all"]
    };
    let obs = d.observations();

    let mut modes = Vec::new();
    for &mode in &Mode::ALL {
        for &group in &groups {
            let in_group = obs
                .iter()
                .filter(|o| group_of(o, by_gender) == group)
                .count();
            let cell: Vec<&Observation> = obs
                .iter()
                .filter(|o| o.chosen_mode == mode && group_of(o, by_gender) == group)
                .collect();
            let detours: Vec<f64> = cell.iter().map(|o| o.stated_detour_min).collect();
            let pay: Vec<f64> = cell.iter().map(|o| o.remuneration_uah).collect();
            modes.push(ModeGroupStats {
                mode,
                group,
                count: cell.len(),
                share_pct: (in_group > 0).then(|| 100.0 * cell.len() as f64 / in_group as f64),
                detour: detour_stats(&detours),
                remuneration: quartiles(&pay),
            });
        }
    }

    let trip_chain = breakdown(
        "Trip-chain integration",
        TripChain::ALL.iter().map(|t| t.label()).collect(),
        obs,
        &groups,
        by_gender,
        |o| {
            TripChain::ALL
                .iter()
                .position(|t| *t == o.trip_chain)
                .unwrap()
        },
    );
    let frequency = breakdown(
        "Delivery frequency",
        Frequency::ALL.iter().map(|f| f.as_str()).collect(),
        obs,
        &groups,
        by_gender,
        |o| {
            Frequency::ALL
                .iter()
                .position(|f| *f == o.frequency)
                .unwrap()
        },
    );

    SummaryReport {
        sample_size: d.len(),
        groups,
        modes,
        trip_chain,
        frequency,
    }
}

fn breakdown(
    title: &'static str,
    levels: Vec<&'static str>,
    obs: &[Observation],
    groups: &[&'static str],
    by_gender: bool,
    level_of: impl Fn(&Observation) -> usize,
) -> Breakdown {
    let mut rows = Vec::new();
    let scopes = std::iter::once(None).chain(Mode::ALL.iter().copied().map(Some));
    for scope in scopes {
        for &group in groups {
            let mut counts = vec![0usize; levels.len()];
            for o in obs {
                if group_of(o, by_gender) == group && scope.is_none_or(|m| o.chosen_mode == m) {
                    counts[level_of(o)] += 1;
                }
            }
            let total: usize = counts.iter().sum();
            let percents = (total > 0).then(|| {
                counts
                    .iter()
                    .map(|&c| 100.0 * c as f64 / total as f64)
                    .collect()
            });
            rows.push(BreakdownRow {
                mode: scope,
                group,
                counts,
                percents,
            });
        }
    }
    Breakdown {
        title,
        levels,
        rows,
    }
}

fn detour_stats(values: &[f64]) -> Option<DetourStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(DetourStats {
        mean,
        sd,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some(Quartiles {
        min: v[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: v[v.len() - 1],
    })
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

impl SummaryReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Sample size: {}", self.sample_size);
        let _ = writeln!(s);
        let _ = writeln!(s, "Acceptable detour times (minutes) and mode shares");
        let _ = writeln!(
            s,
            "{:<20} {:<7} {:>5} {:>8} {:>7} {:>7} {:>6} {:>6}",
            "Mode", "Group", "N", "Share,%", "Mean", "SD", "Min", "Max"
        );
        for m in &self.modes {
            let d = m.detour.as_ref();
            let _ = writeln!(
                s,
                "{:<20} {:<7} {:>5} {:>8} {:>7} {:>7} {:>6} {:>6}",
                m.mode.label(),
                m.group,
                m.count,
                opt(m.share_pct, 2),
                opt(d.map(|d| d.mean), 1),
                opt(d.map(|d| d.sd), 2),
                opt(d.map(|d| d.min), 0),
                opt(d.map(|d| d.max), 0),
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Expected remuneration (UAH)");
        let _ = writeln!(
            s,
            "{:<20} {:<7} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "Mode", "Group", "Min", "Q1", "Median", "Q3", "Max"
        );
        for m in &self.modes {
            let q = m.remuneration.as_ref();
            let _ = writeln!(
                s,
                "{:<20} {:<7} {:>7} {:>7} {:>7} {:>7} {:>7}",
                m.mode.label(),
                m.group,
                opt(q.map(|q| q.min), 1),
                opt(q.map(|q| q.q1), 1),
                opt(q.map(|q| q.median), 1),
                opt(q.map(|q| q.q3), 1),
                opt(q.map(|q| q.max), 1),
            );
        }
        for b in [&self.trip_chain, &self.frequency] {
            let _ = writeln!(s);
            let _ = writeln!(s, "{}", b.title);
            let mut header = format!("{:<20} {:<7}", "Scope", "Group");
            for l in &b.levels {
                let _ = write!(header, " {:>19}", l);
            }
            let _ = writeln!(s, "{header}");
            for r in &b.rows {
                let scope = r.mode.map_or("Within the sample", |m| m.label());
                let mut line = format!("{:<20} {:<7}", scope, r.group);
                for (i, c) in r.counts.iter().enumerate() {
                    let pct = r.percents.as_ref().map(|p| p[i]);
                    let _ = write!(line, " {:>19}", format!("{c} ({})", opt(pct, 2)));
                }
                let _ = writeln!(s, "{line}");
            }
        }
        s
    }

    /// Long-format CSV: `table,scope,group,key,value`. Absent cells are left
    /// empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("table,scope,group,key,value\n");
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for m in &self.modes {
            let d = m.detour.as_ref();
            let q = m.remuneration.as_ref();
            let rows: [(&str, &str, String); 11] = [
                ("detour", "count", m.count.to_string()),
                ("detour", "share_pct", num(m.share_pct)),
                ("detour", "mean", num(d.map(|d| d.mean))),
                ("detour", "sd", num(d.map(|d| d.sd))),
                ("detour", "min", num(d.map(|d| d.min))),
                ("detour", "max", num(d.map(|d| d.max))),
                ("remuneration", "min", num(q.map(|q| q.min))),
                ("remuneration", "q1", num(q.map(|q| q.q1))),
                ("remuneration", "median", num(q.map(|q| q.median))),
                ("remuneration", "q3", num(q.map(|q| q.q3))),
                ("remuneration", "max", num(q.map(|q| q.max))),
            ];
            for (table, key, value) in rows {
                let _ = writeln!(s, "{table},{},{},{key},{value}", m.mode, m.group);
            }
        }
        for (name, b) in [
            ("trip_chain", &self.trip_chain),
            ("frequency", &self.frequency),
        ] {
            for r in &b.rows {
                let scope = r.mode.map_or("sample", |m| m.as_str());
                for (i, level) in b.levels.iter().enumerate() {
                    let pct = r.percents.as_ref().map(|p| p[i]);
                    let _ = writeln!(
                        s,
                        "{name},{scope},{},{level}_count,{}",
                        r.group, r.counts[i]
                    );
                    let _ = writeln!(s, "{name},{scope},{},{level}_pct,{}", r.group, num(pct));
                }
            }
        }
        s
    }

    pub fn mode_stats(&self, mode: Mode, group: &str) -> Option<&ModeGroupStats> {
        self.modes
            .iter()
            .find(|m| m.mode == mode && m.group == group)
    }
}
