//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)) with
//! dense output, used as the independent ODE oracle for the reduced equations.

use super::NumericsError;

/// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output coefficients (Hairer-Norsett-Wanner rcont)
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

pub type Rhs<'a> = &'a dyn Fn(f64, &[f64], &mut [f64]) -> Result<(), NumericsError>;

/// One accepted step with the data needed for 4th-order dense interpolation.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    pub y0: Vec<f64>,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    /// Solution value inside the step (theta in [0,1]).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let n = self.y0.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<DenseStep>,
    pub t_end: f64,
    pub y_end: Vec<f64>,
    pub n_steps: usize,
    pub n_rejected: usize,
}

impl Trajectory {
    /// Dense evaluation anywhere inside the integrated span.
    pub fn at(&self, t: f64) -> Option<Vec<f64>> {
        if self.steps.is_empty() {
            return None;
        }
        let first = &self.steps[0];
        let dir = self.t_end >= first.t0;
        if (dir && (t < first.t0 - 1e-12 || t > self.t_end + 1e-12))
            || (!dir && (t > first.t0 + 1e-12 || t < self.t_end - 1e-12))
        {
            return None;
        }
        let step = self
            .steps
            .iter()
            .find(|s| {
                let (a, b) = (s.t0, s.t0 + s.h);
                if dir {
                    t >= a - 1e-12 && t <= b + 1e-12
                } else {
                    t <= a + 1e-12 && t >= b - 1e-12
                }
            })
            .unwrap_or_else(|| self.steps.last().unwrap());
        Some(step.eval(t))
    }
}

pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            max_steps: 1_000_000,
        }
    }
}

/// Integrates y' = f(t, y) from t0 to t1 with adaptive Dormand-Prince 5(4).
pub fn integrate(
    f: Rhs,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory, NumericsError> {
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Ok(Trajectory {
            steps: vec![],
            t_end: t0,
            y_end: y0.to_vec(),
            n_steps: 0,
            n_rejected: 0,
        });
    }
    let mut h = opts.h0.unwrap_or(span / 100.0).min(span) * dir;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0])?;
    let mut steps = Vec::new();
    let mut n_steps = 0;
    let mut n_rejected = 0;
    while (t - t1) * dir < 0.0 {
        if n_steps + n_rejected > opts.max_steps {
            return Err(NumericsError::StepBudget);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(NumericsError::StepUnderflow(t));
        }
        // stages
        let mut ytmp = vec![0.0; n];
        let mut failed = false;
        for s in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let ts = t + C[s] * h;
            let (head, tail) = k.split_at_mut(s + 1);
            let _ = head;
            if f(ts, &ytmp, &mut tail[0]).is_err() {
                failed = true;
                break;
            }
        }
        if failed {
            // domain failure inside the step: shrink
            h *= 0.25;
            n_rejected += 1;
            continue;
        }
        // y5 is in ytmp after the last stage (A[5] are the 5th-order weights)
        let y5 = ytmp.clone();
        // error estimate
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n as f64).sqrt();
        if err <= 1.0 {
            // accept; build dense output
            let ydiff: Vec<f64> = (0..n).map(|i| y5[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| h * k[0][i] - ydiff[i]).collect();
            let mut rcont4 = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += D[j] * kj[i];
                }
                rcont4[i] = h * acc;
            }
            let rcont = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                (0..n)
                    .map(|i| ydiff[i] - h * k[6][i] - bspl[i])
                    .collect::<Vec<_>>(),
                rcont4,
            ];
            steps.push(DenseStep {
                t0: t,
                h,
                y0: y.clone(),
                rcont,
            });
            t += h;
            y = y5;
            k[0] = k[6].clone(); // FSAL
            n_steps += 1;
        } else {
            n_rejected += 1;
        }
        let fac = (1.0 / err).powf(0.2).clamp(0.2, 5.0) * 0.9;
        h *= fac;
    }
    Ok(Trajectory {
        steps,
        t_end: t,
        y_end: y,
        n_steps,
        n_rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let f: Rhs = &|_t, y, dy| {
            dy[0] = y[0];
            Ok(())
        };
        let tr = integrate(f, 0.0, 1.0, &[1.0], &OdeOptions::default()).unwrap();
        assert!((tr.y_end[0] - 1f64.exp()).abs() < 1e-9);
        // dense output mid-span
        let mid = tr.at(0.5).unwrap();
        assert!((mid[0] - 0.5f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_dense() {
        let f: Rhs = &|_t, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let tr = integrate(f, 0.0, 6.0, &[1.0, 0.0], &OdeOptions::default()).unwrap();
        for k in 0..=60 {
            let t = 0.1 * k as f64;
            let y = tr.at(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn constant_rhs_constant_state() {
        let f: Rhs = &|_t, _y, dy| {
            dy.fill(0.0);
            Ok(())
        };
        let tr = integrate(f, 0.0, 3.0, &[2.0, -1.0], &OdeOptions::default()).unwrap();
        assert_eq!(tr.y_end, vec![2.0, -1.0]);
    }
}

/// An ODE problem with the right-hand side given symbolically: the expression
/// for the highest derivative phi^(order) in the parameters
/// "omega", "phi0", ..., "phi{order-1}".
#[derive(Clone, Debug)]
pub struct OdeProblem {
    pub order: usize,
    pub highest_rhs: crate::symexpr::Expr,
    pub y0: Vec<f64>,
    pub span: (f64, f64),
    pub rtol: f64,
    pub atol: f64,
}

/// Integrates the symbolic problem with the adaptive pair. Domain errors of
/// the right-hand side (e.g. the leading coefficient crossing zero under a
/// fractional power) terminate integration via step underflow.
pub fn integrate_problem(p: &OdeProblem) -> Result<Trajectory, NumericsError> {
    use crate::symexpr::{eval_numeric, Bindings, Slot};
    assert_eq!(p.y0.len(), p.order, "initial state length must equal order");
    let names: Vec<String> = (0..p.order).map(|k| format!("phi{k}")).collect();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), NumericsError> {
        let mut b = Bindings::new();
        b.insert(Slot::Param("omega".into()), t);
        for (k, name) in names.iter().enumerate() {
            b.insert(Slot::Param(name.clone()), y[k]);
        }
        for k in 0..p.order - 1 {
            dy[k] = y[k + 1];
        }
        dy[p.order - 1] = eval_numeric(&p.highest_rhs, &b)?;
        if !dy[p.order - 1].is_finite() {
            return Err(NumericsError::SingularRhs);
        }
        Ok(())
    };
    integrate(
        &rhs,
        p.span.0,
        p.span.1,
        &p.y0,
        &OdeOptions {
            rtol: p.rtol,
            atol: p.atol,
            h0: None,
            max_steps: 2_000_000,
        },
    )
}
