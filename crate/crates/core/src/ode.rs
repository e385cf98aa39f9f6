//! Dormand–Prince 5(4) stepper for planar systems with PI step-size control
//! and the standard 4th-order continuous extension.

pub type Y = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller (Hairer's dopri5 defaults)
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - 0.75 * BETA;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepError {
    /// Step size fell below the representable resolution of t.
    Underflow { t: f64, h: f64, y: Y },
    /// The right-hand side is undefined at the current state.
    Domain { t: f64, y: Y },
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dense {
    pub t0: f64,
    pub t1: f64,
    r: [Y; 5],
}

impl Dense {
    pub fn eval(&self, t: f64) -> Y {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let r = &self.r;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }

    pub fn start(&self) -> Y {
        self.r[0]
    }

    pub fn end(&self) -> Y {
        [self.r[0][0] + self.r[1][0], self.r[0][1] + self.r[1][1]]
    }
}

fn axpy(y: &Y, h: f64, terms: &[(f64, &Y)]) -> Y {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

pub struct Dopri5<F> {
    f: F,
    t: f64,
    y: Y,
    k1: Y,
    h: f64,
    rtol: f64,
    atol: f64,
    fac_old: f64,
    rejected_last: bool,
    fixed: bool,
    last_stages: Option<[Y; 7]>,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl<F: FnMut(f64, &Y) -> Option<Y>> Dopri5<F> {
    pub fn new(mut f: F, t0: f64, y0: Y, rtol: f64, atol: f64) -> Result<Self, StepError> {
        let k1 = f(t0, &y0).ok_or(StepError::Domain { t: t0, y: y0 })?;
        let mut s = Dopri5 {
            f,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            rtol,
            atol,
            fac_old: 1e-4,
            rejected_last: false,
            fixed: false,
            last_stages: None,
            n_accepted: 0,
            n_rejected: 0,
        };
        s.h = s.initial_step();
        Ok(s)
    }

    /// Constant step `h`, every step accepted.
    pub fn fixed(mut f: F, t0: f64, y0: Y, h: f64) -> Result<Self, StepError> {
        let k1 = f(t0, &y0).ok_or(StepError::Domain { t: t0, y: y0 })?;
        Ok(Dopri5 {
            f,
            t: t0,
            y: y0,
            k1,
            h,
            rtol: 1.0,
            atol: 1.0,
            fac_old: 1e-4,
            rejected_last: false,
            fixed: true,
            last_stages: None,
            n_accepted: 0,
            n_rejected: 0,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> Y {
        self.y
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Restart from a new point (after an event), keeping the step size.
    pub fn reset(&mut self, t: f64, y: Y) -> Result<(), StepError> {
        self.k1 = (self.f)(t, &y).ok_or(StepError::Domain { t, y })?;
        self.t = t;
        self.y = y;
        self.rejected_last = false;
        Ok(())
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> f64 {
        let sk = [self.scale(self.y[0], 0.0), self.scale(self.y[1], 0.0)];
        let norm = |v: &Y| ((v[0] / sk[0]).powi(2) + (v[1] / sk[1]).powi(2)).sqrt() / 2f64.sqrt();
        let (d0, d1) = (norm(&self.y), norm(&self.k1));
        let h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(&self.y, h0, &[(1.0, &self.k1)]);
        let d2 = match (self.f)(self.t + h0, &y1) {
            Some(k) => norm(&[k[0] - self.k1[0], k[1] - self.k1[1]]) / h0,
            None => return h0,
        };
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1)
    }

    /// Advances by one accepted step without passing `t_max`.
    pub fn step(&mut self, t_max: f64) -> Result<Dense, StepError> {
        loop {
            let remaining = t_max - self.t;
            let mut h = self.h.min(remaining);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let h_min = 16.0 * f64::EPSILON * self.t.abs().max(1.0);
            if h < h_min && !last {
                return Err(StepError::Underflow { t: self.t, h, y: self.y });
            }
            match self.attempt(h) {
                Some((y1, k7, err)) => {
                    if self.fixed || err <= 1.0 {
                        let dense = self.dense(h, &y1, &k7);
                        let fac11 = err.max(1e-300).powf(EXPO);
                        let mut fac = fac11 / self.fac_old.powf(BETA);
                        fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                        let mut h_new = h / fac;
                        if self.rejected_last {
                            h_new = h_new.min(h);
                        }
                        self.fac_old = err.max(1e-4);
                        self.t = if last { t_max } else { self.t + h };
                        self.y = y1;
                        self.k1 = k7;
                        if !self.fixed && !last {
                            self.h = h_new;
                        } else if !self.fixed {
                            self.h = h_new.max(self.h);
                        }
                        self.rejected_last = false;
                        self.n_accepted += 1;
                        return Ok(dense);
                    }
                    let fac11 = err.powf(EXPO);
                    self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                }
                None => {
                    if self.fixed {
                        return Err(StepError::Domain { t: self.t, y: self.y });
                    }
                    self.h = 0.25 * h;
                }
            }
            self.rejected_last = true;
            self.n_rejected += 1;
        }
    }

    fn stages(&mut self, h: f64) -> Option<[Y; 7]> {
        let (t, y, k1) = (self.t, self.y, self.k1);
        let f = &mut self.f;
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1)?;
        if !(y1[0].is_finite() && y1[1].is_finite()) {
            return None;
        }
        Some([k1, k2, k3, k4, k5, k6, k7])
    }

    fn attempt(&mut self, h: f64) -> Option<(Y, Y, f64)> {
        let k = self.stages(h)?;
        let y = self.y;
        let y1 = axpy(&y, h, &[(A71, &k[0]), (A73, &k[2]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])]);
        let e = axpy(&[0.0, 0.0], h, &[(E1, &k[0]), (E3, &k[2]), (E4, &k[3]), (E5, &k[4]), (E6, &k[5]), (E7, &k[6])]);
        let mut acc = 0.0;
        for i in 0..2 {
            let sk = self.scale(y[i], y1[i]);
            acc += (e[i] / sk).powi(2);
        }
        self.last_stages = Some(k);
        Some((y1, k[6], (acc / 2.0).sqrt()))
    }

    fn dense(&mut self, h: f64, y1: &Y, k7: &Y) -> Dense {
        let k = self.last_stages.take().expect("stages of the accepted step");
        let y0 = self.y;
        let mut r = [[0.0; 2]; 5];
        for i in 0..2 {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            r[0][i] = y0[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * k7[i] - bspl;
            r[4][i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k7[i]);
        }
        Dense { t0: self.t, t1: self.t + h, r }
    }
}
