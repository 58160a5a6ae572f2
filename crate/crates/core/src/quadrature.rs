//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

/// Default absolute tolerance.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Default relative tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: DEFAULT_ABS_TOL, rel_tol: DEFAULT_REL_TOL, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * half;
    let error = ((resk - resg) * half).abs();
    Segment { a, b, value, error }
}

impl Quadrature {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    /// `∫_a^b f`, bisecting the worst segment until the summed error estimate
    /// meets `max(abs_tol, rel_tol·|I|)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> QuadResult {
        self.integrate_pieces(&f, &[a, b])
    }

    /// Integrate over consecutive breakpoints, refining globally.
    pub fn integrate_pieces<F: Fn(f64) -> f64>(&self, f: &F, points: &[f64]) -> QuadResult {
        if points.len() < 2 {
            return QuadResult { value: 0.0, abs_error: 0.0, converged: true };
        }
        let mut segs: Vec<Segment> = points
            .windows(2)
            .filter(|w| w[1] != w[0])
            .map(|w| kronrod(f, w[0], w[1]))
            .collect();
        loop {
            let value: f64 = segs.iter().map(|s| s.value).sum();
            let error: f64 = segs.iter().map(|s| s.error).sum();
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target || !error.is_finite() {
                return QuadResult { value, abs_error: error, converged: error.is_finite() };
            }
            if segs.len() >= self.max_intervals {
                return QuadResult { value, abs_error: error, converged: false };
            }
            let (worst, _) = segs
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .expect("nonempty");
            let s = segs.swap_remove(worst);
            let mid = 0.5 * (s.a + s.b);
            if mid <= s.a || mid >= s.b {
                // interval exhausted at machine resolution
                let value: f64 = segs.iter().map(|s| s.value).sum::<f64>() + s.value;
                return QuadResult { value, abs_error: error, converged: false };
            }
            segs.push(kronrod(f, s.a, mid));
            segs.push(kronrod(f, mid, s.b));
        }
    }

    /// `∫_a^∞ f` for integrands with (at least) exponential decay: geometric
    /// breakpoints `a, a+h, a+2h, a+4h, …` are added until a block contributes
    /// negligibly.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, f: F, a: f64, h: f64) -> QuadResult {
        let mut total = 0.0;
        let mut err = 0.0;
        let mut converged = true;
        let mut lo = a;
        let mut width = h;
        let mut quiet = 0;
        for _ in 0..200 {
            let hi = lo + width;
            let r = self.integrate(&f, lo, hi);
            total += r.value;
            err += r.abs_error;
            converged &= r.converged;
            if r.value.abs() <= 1e-3 * self.abs_tol.max(self.rel_tol * total.abs()) {
                quiet += 1;
                if quiet >= 2 {
                    return QuadResult { value: total, abs_error: err, converged };
                }
            } else {
                quiet = 0;
            }
            lo = hi;
            width *= 2.0;
            if !lo.is_finite() {
                break;
            }
        }
        QuadResult { value: total, abs_error: err, converged: false }
    }
}

/// Convenience wrapper with default tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    Quadrature::default().integrate(f, a, b).value
}
