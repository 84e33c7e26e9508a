//! Fixed-step integration of `ẍ = −∇U(x)` with the derivative of the
//! discrete time-`T` map with respect to the initial state and to `T`.
//!
//! Both schemes differentiate the scheme itself rather than the flow, so
//! Newton on the shooting residual sees the exact Jacobian of the map it
//! is solving for.

use serde::Serialize;

use crate::linalg::Matrix;
use crate::potential::{Jet2, PotentialSpec};
use crate::scalar::{Real, Scalar};

use super::OrbitError;

fn f64_of<T: Real>(x: T) -> f64 {
    Scalar::to_f64(&x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Velocity Verlet (symplectic, second order).
    #[default]
    Verlet,
    /// Classical fourth-order Runge-Kutta on the time-rescaled system.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub steps: usize,
    pub method: Method,
    pub monodromy: bool,
    pub record_samples: bool,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            steps: 2048,
            method: Method::Verlet,
            monodromy: false,
            record_samples: false,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample<T> {
    pub t: T,
    pub x: Vec<T>,
    pub v: Vec<T>,
    pub energy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub x: Vec<T>,
    pub v: Vec<T>,
    /// `∂(x(T), v(T)) / ∂(x0, v0)`, a `2n × 2n` matrix.
    pub monodromy: Option<Matrix<T>>,
    /// `∂(x(T), v(T)) / ∂T` for the discrete map.
    pub d_period: Option<Vec<T>>,
    pub samples: Vec<Sample<T>>,
}

fn jet<T: Real>(
    spec: &PotentialSpec,
    x: &[T],
    t: f64,
    bounds: &Option<Vec<(f64, f64)>>,
) -> Result<Jet2<T>, OrbitError> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(OrbitError::NonFinite { t });
    }
    if let Some(b) = bounds {
        if x.iter()
            .zip(b)
            .any(|(v, (lo, hi))| f64_of(*v) < *lo || f64_of(*v) > *hi)
        {
            return Err(OrbitError::LeftBounds { t });
        }
    }
    Ok(spec.eval_jet2(x)?)
}

fn energy<T: Real>(v: &[T], u: T) -> T {
    v.iter().fold(u, |e, &vi| e + T::from_f64(0.5) * vi * vi)
}

/// Integrate over `[0, period]` in `opts.steps` equal steps.
pub fn integrate<T: Real>(
    spec: &PotentialSpec,
    x0: &[T],
    v0: &[T],
    period: T,
    opts: &IntegrateOptions,
) -> Result<Trajectory<T>, OrbitError> {
    if opts.steps < 32 {
        return Err(OrbitError::InvalidInput(format!(
            "need at least 32 steps, got {}",
            opts.steps
        )));
    }
    if x0.len() != v0.len() {
        return Err(OrbitError::InvalidInput(
            "position and velocity differ in length".into(),
        ));
    }
    if !(f64_of(period) > 0.0) {
        return Err(OrbitError::InvalidInput(format!(
            "period must be positive, got {}",
            f64_of(period)
        )));
    }
    match opts.method {
        Method::Verlet => verlet(spec, x0, v0, period, opts),
        Method::Rk4 => rk4(spec, x0, v0, period, opts),
    }
}

fn verlet<T: Real>(
    spec: &PotentialSpec,
    x0: &[T],
    v0: &[T],
    period: T,
    opts: &IntegrateOptions,
) -> Result<Trajectory<T>, OrbitError> {
    let n = x0.len();
    let steps = opts.steps;
    let h = period / T::from_f64(steps as f64);
    let half = T::from_f64(0.5);
    let cols = 2 * n + 1;
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    // tangent columns: 2n initial-state directions, then ∂/∂h
    let (mut tx, mut tv) = if opts.monodromy {
        let mut tx = Matrix::<T>::zeros(n, cols);
        let mut tv = Matrix::<T>::zeros(n, cols);
        for i in 0..n {
            tx[(i, i)] = T::one();
            tv[(i, n + i)] = T::one();
        }
        (tx, tv)
    } else {
        (Matrix::zeros(0, 0), Matrix::zeros(0, 0))
    };
    let mut j = jet(spec, &x, 0.0, &opts.bounds)?;
    let mut samples = Vec::new();
    if opts.record_samples {
        samples.push(Sample {
            t: T::zero(),
            x: x.clone(),
            v: v.clone(),
            energy: energy(&v, j.value),
        });
    }
    for step in 0..steps {
        let vh: Vec<T> = (0..n).map(|i| v[i] - half * h * j.gradient[i]).collect();
        if opts.monodromy {
            for c in 0..cols {
                for i in 0..n {
                    let hx = (0..n).fold(T::zero(), |s, k| s + j.hessian[(i, k)] * tx[(k, c)]);
                    tv[(i, c)] = tv[(i, c)] - half * h * hx;
                }
            }
            for i in 0..n {
                tv[(i, 2 * n)] = tv[(i, 2 * n)] - half * j.gradient[i];
            }
            for c in 0..cols {
                for i in 0..n {
                    tx[(i, c)] = tx[(i, c)] + h * tv[(i, c)];
                }
            }
            for i in 0..n {
                tx[(i, 2 * n)] = tx[(i, 2 * n)] + vh[i];
            }
        }
        for i in 0..n {
            x[i] = x[i] + h * vh[i];
        }
        let t = (step + 1) as f64 * f64_of(h);
        j = jet(spec, &x, t, &opts.bounds)?;
        for i in 0..n {
            v[i] = vh[i] - half * h * j.gradient[i];
        }
        if opts.monodromy {
            for c in 0..cols {
                for i in 0..n {
                    let hx = (0..n).fold(T::zero(), |s, k| s + j.hessian[(i, k)] * tx[(k, c)]);
                    tv[(i, c)] = tv[(i, c)] - half * h * hx;
                }
            }
            for i in 0..n {
                tv[(i, 2 * n)] = tv[(i, 2 * n)] - half * j.gradient[i];
            }
        }
        if !v.iter().all(|a| a.is_finite()) {
            return Err(OrbitError::NonFinite { t });
        }
        if opts.record_samples {
            samples.push(Sample {
                t: T::from_f64(t),
                x: x.clone(),
                v: v.clone(),
                energy: energy(&v, j.value),
            });
        }
    }
    let (monodromy, d_period) = if opts.monodromy {
        let mut m = Matrix::zeros(2 * n, 2 * n);
        let mut dp = vec![T::zero(); 2 * n];
        let inv_steps = T::one() / T::from_f64(steps as f64);
        for i in 0..n {
            for c in 0..2 * n {
                m[(i, c)] = tx[(i, c)];
                m[(n + i, c)] = tv[(i, c)];
            }
            dp[i] = tx[(i, 2 * n)] * inv_steps;
            dp[n + i] = tv[(i, 2 * n)] * inv_steps;
        }
        (Some(m), Some(dp))
    } else {
        (None, None)
    };
    Ok(Trajectory {
        x,
        v,
        monodromy,
        d_period,
        samples,
    })
}

/// Augmented state for RK4 on `s ∈ [0,1]`: `z' = T f(z)`, `Φ' = T A Φ`,
/// `w' = f(z) + T A w`, where `w = ∂z/∂T`.
struct Aug<T> {
    z: Vec<T>,
    phi: Option<Matrix<T>>,
    w: Option<Vec<T>>,
}

fn rk4<T: Real>(
    spec: &PotentialSpec,
    x0: &[T],
    v0: &[T],
    period: T,
    opts: &IntegrateOptions,
) -> Result<Trajectory<T>, OrbitError> {
    let n = x0.len();
    let steps = opts.steps;
    let ds = T::one() / T::from_f64(steps as f64);
    let two = T::from_f64(2.0);
    let sixth = T::one() / T::from_f64(6.0);
    let mut state = Aug {
        z: x0.iter().chain(v0).copied().collect(),
        phi: opts.monodromy.then(|| Matrix::identity(2 * n)),
        w: opts.monodromy.then(|| vec![T::zero(); 2 * n]),
    };
    let rhs = |a: &Aug<T>, t: f64| -> Result<(Aug<T>, T), OrbitError> {
        let x = &a.z[..n];
        let j = jet(spec, x, t, &opts.bounds)?;
        let f: Vec<T> = a.z[n..].iter().copied().chain(j.gradient.iter().map(|g| -*g)).collect();
        let apply_a = |col: &dyn Fn(usize) -> T| -> Vec<T> {
            // A = [[0, I], [−H, 0]]
            let mut out = vec![T::zero(); 2 * n];
            for i in 0..n {
                out[i] = col(n + i);
                out[n + i] = -(0..n).fold(T::zero(), |s, k| s + j.hessian[(i, k)] * col(k));
            }
            out
        };
        let phi = a.phi.as_ref().map(|p| {
            let mut d = Matrix::zeros(2 * n, 2 * n);
            for c in 0..2 * n {
                let col = apply_a(&|r| p[(r, c)]);
                for r in 0..2 * n {
                    d[(r, c)] = period * col[r];
                }
            }
            d
        });
        let w = a.w.as_ref().map(|w| {
            let aw = apply_a(&|r| w[r]);
            (0..2 * n).map(|r| f[r] + period * aw[r]).collect()
        });
        let z = f.iter().map(|fi| period * *fi).collect();
        Ok((Aug { z, phi, w }, j.value))
    };
    let axpy = |a: &Aug<T>, k: &Aug<T>, c: T| Aug {
        z: a.z.iter().zip(&k.z).map(|(x, y)| *x + c * *y).collect(),
        phi: a.phi.as_ref().zip(k.phi.as_ref()).map(|(p, q)| {
            let mut out = p.clone();
            for r in 0..2 * n {
                for s in 0..2 * n {
                    out[(r, s)] = p[(r, s)] + c * q[(r, s)];
                }
            }
            out
        }),
        w: a.w
            .as_ref()
            .zip(k.w.as_ref())
            .map(|(p, q)| p.iter().zip(q).map(|(x, y)| *x + c * *y).collect()),
    };
    let mut samples = Vec::new();
    let tf = f64_of(period);
    for step in 0..steps {
        let t = step as f64 * tf / steps as f64;
        let (k1, u) = rhs(&state, t)?;
        if opts.record_samples {
            samples.push(Sample {
                t: T::from_f64(t),
                x: state.z[..n].to_vec(),
                v: state.z[n..].to_vec(),
                energy: energy(&state.z[n..], u),
            });
        }
        let th = t + 0.5 * tf / steps as f64;
        let (k2, _) = rhs(&axpy(&state, &k1, ds / two), th)?;
        let (k3, _) = rhs(&axpy(&state, &k2, ds / two), th)?;
        let (k4, _) = rhs(&axpy(&state, &k3, ds), t + tf / steps as f64)?;
        let mut next = axpy(&state, &k1, ds * sixth);
        next = axpy(&next, &k2, two * ds * sixth);
        next = axpy(&next, &k3, two * ds * sixth);
        state = axpy(&next, &k4, ds * sixth);
        if !state.z.iter().all(|a| a.is_finite()) {
            return Err(OrbitError::NonFinite { t: th });
        }
    }
    if opts.record_samples {
        let j = jet(spec, &state.z[..n], tf, &opts.bounds)?;
        samples.push(Sample {
            t: period,
            x: state.z[..n].to_vec(),
            v: state.z[n..].to_vec(),
            energy: energy(&state.z[n..], j.value),
        });
    }
    Ok(Trajectory {
        x: state.z[..n].to_vec(),
        v: state.z[n..].to_vec(),
        monodromy: state.phi,
        d_period: state.w,
        samples,
    })
}
