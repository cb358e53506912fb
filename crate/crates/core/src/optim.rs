//! BFGS with a strong-Wolfe line search, minimizing a smooth objective with
//! an analytic gradient.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Convergence when the gradient max-norm falls below this.
    pub gradient_tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub message: &'static str,
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 60;
/// Relative band within which objective differences are treated as
/// rounding noise; inside it the line search relies on the slope alone
/// (the approximate Wolfe test of Hager and Zhang).
const NOISE_BAND: f64 = 1e-12;
/// Upper slope bound for approximate Wolfe acceptance, as a multiple of
/// the initial slope magnitude.
const APPROX_SLOPE: f64 = 0.8;

/// Strong-Wolfe line search along `d` (bracketing then zoom).
fn line_search<F>(objective: &F, start: &Point, d: &[f64], alpha0: f64) -> Option<Point>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let dphi0 = dot(&start.g, d);
    if dphi0 >= 0.0 {
        return None;
    }
    let eval = |alpha: f64| {
        let x = axpy(&start.x, alpha, d);
        let (f, g) = objective(&x);
        let slope = dot(&g, d);
        (Point { x, f, g }, slope)
    };

    let noise = NOISE_BAND * start.f.abs().max(1.0);
    // sufficient decrease, either strictly or within the noise band with a
    // slope that has not turned sharply upward
    let decreased = |alpha: f64, f: f64, slope: f64| {
        f <= start.f + C1 * alpha * dphi0
            || (f <= start.f + noise && slope <= -APPROX_SLOPE * dphi0)
    };
    // compare against the low end only when the difference is resolvable
    let worse_than = |f: f64, lo_f: f64| f >= lo_f && f > start.f + noise;

    let (mut lo_a, mut lo_f, mut lo_slope) = (0.0, start.f, dphi0);
    let mut alpha = alpha0;
    let mut evals = 0;
    let bracket: (f64, f64);

    // bracketing phase
    loop {
        evals += 1;
        let (p, slope) = eval(alpha);
        if !p.f.is_finite() || !decreased(alpha, p.f, slope) || (evals > 1 && worse_than(p.f, lo_f))
        {
            bracket = (alpha, if p.f.is_finite() { p.f } else { f64::INFINITY });
            break;
        }
        if slope.abs() <= -C2 * dphi0 {
            return Some(p);
        }
        if slope >= 0.0 {
            bracket = (lo_a, lo_f);
            lo_a = alpha;
            lo_f = p.f;
            lo_slope = slope;
            break;
        }
        lo_a = alpha;
        lo_f = p.f;
        lo_slope = slope;
        alpha *= 2.0;
        if evals >= MAX_LINE_EVALS {
            return None;
        }
    }

    // zoom phase
    let (mut hi, mut hi_f) = bracket;
    let mut best: Option<Point> = None;
    while evals < MAX_LINE_EVALS {
        evals += 1;
        // safeguarded quadratic interpolation from the low end
        let width = hi - lo_a;
        let denom = 2.0 * (hi_f - lo_f - lo_slope * width);
        let mut trial = if hi_f.is_finite() && denom > 0.0 {
            lo_a - lo_slope * width * width / denom
        } else {
            lo_a + 0.5 * width
        };
        let (a, b) = if lo_a < hi { (lo_a, hi) } else { (hi, lo_a) };
        let margin = 0.1 * (b - a);
        if !(trial > a + margin && trial < b - margin) {
            trial = 0.5 * (a + b);
        }
        let (p, slope) = eval(trial);
        if !p.f.is_finite() || !decreased(trial, p.f, slope) || worse_than(p.f, lo_f) {
            hi = trial;
            hi_f = if p.f.is_finite() { p.f } else { f64::INFINITY };
        } else {
            if slope.abs() <= -C2 * dphi0 {
                return Some(p);
            }
            if slope * (hi - lo_a) >= 0.0 {
                hi = lo_a;
                hi_f = lo_f;
            }
            lo_a = trial;
            lo_f = p.f;
            lo_slope = slope;
            best = Some(p);
        }
        if (hi - lo_a).abs() < 1e-16 * lo_a.abs().max(1.0) {
            break;
        }
    }
    // sufficient decrease without the curvature condition is still progress
    best.filter(|p| p.f <= start.f + noise)
}

/// Minimizes `objective` from `x0`. `objective` returns the value and the
/// gradient at a point.
pub fn minimize<F>(objective: F, x0: Vec<f64>, opts: &OptimizerOptions) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let (f0, g0) = objective(&x0);
    let mut cur = Point {
        x: x0,
        f: f0,
        g: g0,
    };
    let identity = |scale: f64| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut h_inv = identity(1.0);
    let mut fresh = true;
    let mut iterations = 0;

    if n == 0 {
        return Minimum {
            x: cur.x,
            value: cur.f,
            gradient: cur.g,
            iterations: 0,
            converged: true,
            message: "no free parameters",
        };
    }

    loop {
        if max_norm(&cur.g) < opts.gradient_tolerance {
            return finish(cur, iterations, true, "gradient tolerance reached");
        }
        if iterations >= opts.max_iterations {
            return finish(cur, iterations, false, "iteration limit reached");
        }
        let d: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| h_inv[i * n + j] * cur.g[j]).sum::<f64>())
            .collect();
        let alpha0 = if fresh {
            (1.0 / dot(&cur.g, &cur.g).sqrt()).min(1.0)
        } else {
            1.0
        };
        let next = match line_search(&objective, &cur, &d, alpha0) {
            Some(p) => p,
            None if !fresh => {
                h_inv = identity(1.0);
                fresh = true;
                continue;
            }
            None => return finish(cur, iterations, false, "line search failed"),
        };
        iterations += 1;

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h_inv = identity(scale);
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
            fresh = false;
        }
        let stalled = (cur.f - next.f).abs() <= 1e-15 * cur.f.abs().max(1.0)
            && max_norm(&s) <= 1e-15 * max_norm(&next.x).max(1.0);
        cur = next;
        if stalled {
            let ok = max_norm(&cur.g) < opts.gradient_tolerance;
            return finish(cur, iterations, ok, "no further progress");
        }
    }
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum())
        .collect();
    let yhy = dot(y, &hy);
    // H+ = H - rho (H y s' + s y' H) + (rho^2 y'Hy + rho) s s'
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] +=
                -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn finish(p: Point, iterations: usize, converged: bool, message: &'static str) -> Minimum {
    Minimum {
        x: p.x,
        value: p.f,
        gradient: p.g,
        iterations,
        converged,
        message,
    }
}
