use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::mode::Mode;

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Argument(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

string_enum!(Gender {
    Female => "female",
    Male => "male",
});

string_enum!(
    /// Respondent age band.
    AgeBand {
        From18To24 => "18-24",
        From25To34 => "25-34",
        From35To44 => "35-44",
        From45 => "45+",
    }
);

string_enum!(
    /// How the delivery detour fits into the courier's routine trips.
    TripChain {
        HomeWork => "HW",
        WorkHome => "WH",
        WorkGroceries => "WG",
        HomeHomeEvening => "HH",
    }
);

string_enum!(
    /// Preferred delivery frequency.
    Frequency {
        Everyday => "everyday",
        SeveralPerWeek => "several_per_week",
        OncePerWeek => "once_per_week",
        SeveralPerMonth => "several_per_month",
        OncePerMonth => "once_per_month",
        LessThanMonthly => "less_than_monthly",
    }
);

impl TripChain {
    pub fn label(self) -> &'static str {
        match self {
            TripChain::HomeWork => "H-W",
            TripChain::WorkHome => "W-H",
            TripChain::WorkGroceries => "W-G",
            TripChain::HomeHomeEvening => "H-H",
        }
    }
}

/// Monthly personal wage band as asked in the survey.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WageBand {
    pub lower_uah: f64,
    /// `None` for the open-ended top band.
    pub upper_uah: Option<f64>,
}

/// Wage bands and their encoded values. The open top band encodes as 55,000.
pub const WAGE_BANDS: [(WageBand, f64); 7] = [
    (
        WageBand {
            lower_uah: 0.0,
            upper_uah: Some(5_000.0),
        },
        2_500.0,
    ),
    (
        WageBand {
            lower_uah: 5_000.0,
            upper_uah: Some(10_000.0),
        },
        7_500.0,
    ),
    (
        WageBand {
            lower_uah: 10_000.0,
            upper_uah: Some(20_000.0),
        },
        15_000.0,
    ),
    (
        WageBand {
            lower_uah: 20_000.0,
            upper_uah: Some(30_000.0),
        },
        25_000.0,
    ),
    (
        WageBand {
            lower_uah: 30_000.0,
            upper_uah: Some(40_000.0),
        },
        35_000.0,
    ),
    (
        WageBand {
            lower_uah: 40_000.0,
            upper_uah: Some(50_000.0),
        },
        45_000.0,
    ),
    (
        WageBand {
            lower_uah: 50_000.0,
            upper_uah: None,
        },
        55_000.0,
    ),
];

pub const DETOUR_RANGE_MIN: (f64, f64) = (15.0, 60.0);
pub const REMUNERATION_RANGE_UAH: (f64, f64) = (50.0, 120.0);

/// One survey respondent acting as a potential courier.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub id: String,
    pub gender: Gender,
    pub age_band: AgeBand,
    pub income_uah: f64,
    pub car_available: bool,
    pub chosen_mode: Mode,
    pub stated_detour_min: f64,
    pub remuneration_uah: f64,
    pub trip_chain: TripChain,
    pub frequency: Frequency,
}

impl Observation {
    /// Soft range checks; returns a description for each value outside the
    /// survey instrument's range.
    pub fn range_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = DETOUR_RANGE_MIN;
        if self.stated_detour_min < lo || self.stated_detour_min > hi {
            out.push(format!(
                "stated detour {} min outside [{lo}, {hi}]",
                self.stated_detour_min
            ));
        }
        let (lo, hi) = REMUNERATION_RANGE_UAH;
        if self.remuneration_uah < lo || self.remuneration_uah > hi {
            out.push(format!(
                "remuneration {} UAH outside [{lo}, {hi}]",
                self.remuneration_uah
            ));
        }
        out
    }
}
