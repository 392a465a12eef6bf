//! Least-squares fit of `A·e^{−Γt}·cos(ωt + φ) + C`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SVector, SymmetricEigen, Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum number of samples accepted by [`fit_damped_sine`].
pub const MIN_SAMPLES: usize = 8;

const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampedSineFit {
    /// Angular frequency, rad·μs⁻¹, `≥ 0`.
    pub omega: f64,
    /// Decay rate, μs⁻¹.
    pub gamma: f64,
    pub amplitude: f64,
    /// Phase in `(−π, π]`.
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
    pub converged: bool,
}

impl DampedSineFit {
    pub fn eval(&self, t: f64) -> f64 {
        model(&self.params(), t)
    }

    fn params(&self) -> Params {
        Params::from([self.amplitude, self.gamma, self.omega, self.phase, self.offset])
    }
}

/// `(A, Γ, ω, φ, C)`.
type Params = SVector<f64, 5>;

fn model(p: &Params, t: f64) -> f64 {
    p[0] * (-p[1] * t).exp() * (p[2] * t + p[3]).cos() + p[4]
}

fn gradient(p: &Params, t: f64) -> Params {
    let e = (-p[1] * t).exp();
    let (s, c) = (p[2] * t + p[3]).sin_cos();
    Params::from([e * c, -t * p[0] * e * c, -t * p[0] * e * s, -p[0] * e * s, 1.0])
}

fn cost(p: &Params, times: &[f64], values: &[f64]) -> f64 {
    times
        .iter()
        .zip(values)
        .map(|(&t, &y)| (model(p, t) - y).powi(2))
        .sum()
}

/// Fits a damped cosine from three frequency seeds (`0`, the spectral peak,
/// twice the peak) and keeps the lowest residual. Each start first solves for
/// `(Γ, ω)` with amplitude, phase and offset projected out, then polishes all
/// five parameters with Levenberg–Marquardt.
pub fn fit_damped_sine(times: &[f64], values: &[f64]) -> Result<DampedSineFit> {
    let n = times.len();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: (n, 1),
            found: (values.len(), 1),
        });
    }
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedTimes);
    }
    if times.iter().chain(values).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }

    let mean = values.iter().sum::<f64>() / n as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-14 * mean.abs().max(1.0) {
        return Ok(DampedSineFit {
            omega: 0.0,
            gamma: 0.0,
            amplitude: 0.0,
            phase: 0.0,
            offset: if values.iter().all(|&v| v == values[0]) { values[0] } else { mean },
            residual_rms: 0.0,
            converged: true,
        });
    }

    let tail = (n / 10).max(1);
    let offset = values[n - tail..].iter().sum::<f64>() / tail as f64;
    let peak = spectral_peak(times, values, offset);
    let gamma = envelope_rate(times, values, offset);

    let span = times[n - 1] - times[0];
    let nyquist = PI * (n - 1) as f64 / span;
    let mut seeds = vec![0.0];
    if peak > 0.0 {
        seeds.extend([peak, 2.0 * peak]);
    } else {
        // Overdamped-looking spectrum with no interior maximum: a frequency
        // ladder in steps of half a cycle per window replaces the peak seeds.
        seeds.extend((1..=16).map(|k| k as f64 * PI / span).filter(|&w| w < nyquist));
    }

    let mut starts: Vec<[f64; 2]> = seeds.into_iter().map(|w| [gamma, w]).collect();
    starts.extend(prony_seed(times, values));

    let mut best: Option<(f64, Params, bool)> = None;
    for theta in starts {
        let Some(start) = projected_fit(theta, times, values, nyquist) else {
            continue;
        };
        let (p, converged) = levenberg_marquardt(start, times, values, nyquist);
        let c = cost(&p, times, values);
        if c.is_finite() && best.as_ref().is_none_or(|b| c < b.0) {
            best = Some((c, p, converged));
        }
    }
    let (c, p, converged) = best.ok_or(Error::NonFinite)?;
    Ok(canonical(p, (c / n as f64).sqrt(), converged))
}

/// Frequency of the strongest interior local maximum of
/// `|Σ (v − C) e^{−iωt} Δt|²` on `(0, π/Δt̄]`, so that a poorly estimated
/// offset (whose power sits at `ω = 0`) cannot mask the oscillation.
fn spectral_peak(times: &[f64], values: &[f64], offset: f64) -> f64 {
    let n = times.len();
    let span = times[n - 1] - times[0];
    let nyquist = PI * (n - 1) as f64 / span;
    let grid = 8 * n;
    let power: Vec<f64> = (0..=grid)
        .map(|k| {
            let w = nyquist * k as f64 / grid as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                let dt = if i + 1 < n { times[i + 1] - times[i] } else { times[i] - times[i - 1] };
                let (s, c) = (w * times[i]).sin_cos();
                let y = values[i] - offset;
                re += y * c * dt;
                im -= y * s * dt;
            }
            re * re + im * im
        })
        .collect();
    let mut best = (0.0, 0.0);
    for k in 1..grid {
        if power[k] > power[k - 1] && power[k] >= power[k + 1] && power[k] > best.1 {
            best = (nyquist * k as f64 / grid as f64, power[k]);
        }
    }
    best.0
}

/// Slope of `−ln|v − C|` over samples well above the noise floor.
fn envelope_rate(times: &[f64], values: &[f64], offset: f64) -> f64 {
    let max = values.iter().map(|v| (v - offset).abs()).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| (*v - offset).abs() > 0.05 * max)
        .map(|(&t, &v)| (t, (v - offset).abs().ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mt) * (p.1 - my), a.1 + (p.0 - mt).powi(2)));
    if den > 0.0 {
        (-num / den).max(0.0)
    } else {
        0.0
    }
}

/// `(Γ, ω)` from third-order linear prediction on uniformly spaced samples.
///
/// The model is a sum of the modes `e^{(−Γ±iω)t}` and `1`, so the samples obey
/// `y[k+3] = c₁y[k+2] + c₂y[k+1] + c₃y[k]`; the root of the characteristic
/// cubic closest to `1` is the offset and the remaining roots give the decay.
fn prony_seed(times: &[f64], values: &[f64]) -> Option<[f64; 2]> {
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return None;
    }
    let rows = n - 3;
    let a = DMatrix::from_fn(rows, 3, |k, j| values[k + 2 - j]);
    let b = DVector::from_fn(rows, |k, _| values[k + 3]);
    let svd = a.svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let c = svd.solve(&b, tol).ok()?;
    // Companion matrix of z³ − c₁z² − c₂z − c₃.
    let companion = Matrix3::new(c[0], c[1], c[2], 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let mut roots: Vec<_> = companion.complex_eigenvalues().iter().copied().collect();
    roots.sort_by(|x, y| (x - 1.0).norm().total_cmp(&(y - 1.0).norm()));
    let z = roots[1..]
        .iter()
        .copied()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))?;
    if z.norm() <= 0.0 || !z.re.is_finite() {
        return None;
    }
    let gamma = -z.norm().ln() / dt;
    let omega = z.im.atan2(z.re).abs() / dt;
    Some([gamma, omega])
}

/// Best `(A, φ, C)` for fixed `(Γ, ω)` by linear least squares on
/// `e^{−Γt}cos ωt`, `−e^{−Γt}sin ωt` and `1`, with its cost.
fn linear_part(theta: [f64; 2], times: &[f64], values: &[f64]) -> Option<(Params, f64)> {
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (&t, &y) in times.iter().zip(values) {
        let e = (-theta[0] * t).exp();
        let (s, c) = (theta[1] * t).sin_cos();
        let b = Vector3::new(e * c, -e * s, 1.0);
        gram += b * b.transpose();
        rhs += b * y;
    }
    if !gram.iter().chain(rhs.iter()).all(|x| x.is_finite()) {
        return None;
    }
    // Pseudo-inverse: at ω = 0 the sine column vanishes.
    let eig = SymmetricEigen::new(gram);
    let tol = 1e-14 * eig.eigenvalues.amax();
    let mut coef = Vector3::zeros();
    for k in 0..3 {
        let lam = eig.eigenvalues[k];
        if lam > tol {
            let v = eig.eigenvectors.column(k);
            coef += v * (v.dot(&rhs) / lam);
        }
    }
    let amplitude = coef[0].hypot(coef[1]);
    let phase = coef[1].atan2(coef[0]);
    let p = Params::from([amplitude, theta[0], theta[1], phase, coef[2]]);
    let c = cost(&p, times, values);
    c.is_finite().then_some((p, c))
}

/// Levenberg–Marquardt over `(Γ, ω)` alone with the linear parameters
/// projected out, which keeps the search well conditioned when `ω → 0`.
fn projected_fit(mut theta: [f64; 2], times: &[f64], values: &[f64], nyquist: f64) -> Option<Params> {
    let eval = |th: [f64; 2]| linear_part(th, times, values);
    let residuals = |th: [f64; 2]| -> Option<DVector<f64>> {
        let (p, _) = eval(th)?;
        Some(DVector::from_iterator(times.len(), times.iter().zip(values).map(|(&t, &y)| model(&p, t) - y)))
    };
    let (mut best, mut c) = eval(theta)?;
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let r0 = residuals(theta)?;
        let mut jac = DMatrix::zeros(times.len(), 2);
        for k in 0..2 {
            let h = 1e-6 * (1.0 + theta[k].abs());
            let (mut up, mut down) = (theta, theta);
            up[k] += h;
            down[k] -= h;
            let d = (residuals(up)? - residuals(down)?) / (2.0 * h);
            jac.set_column(k, &d);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r0;
        let mut improved = false;
        while lambda < 1e12 {
            let a = Matrix2::new(
                jtj[(0, 0)] * (1.0 + lambda) + 1e-300,
                jtj[(0, 1)],
                jtj[(1, 0)],
                jtj[(1, 1)] * (1.0 + lambda) + 1e-300,
            );
            let Some(step) = a.try_inverse().map(|inv| -(inv * Vector2::new(jtr[0], jtr[1]))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [theta[0] + step[0], theta[1] + step[1]];
            match eval(trial) {
                Some((p, ct)) if trial[1].abs() <= nyquist && ct < c => {
                    let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                    theta = trial;
                    best = p;
                    c = ct;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    if rel < 1e-12 {
                        return Some(best);
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    Some(best)
}

/// Steps that push `|ω|` past the Nyquist frequency are rejected so the fit
/// cannot wander onto an alias of the sampled signal.
///
/// Steps come from the SVD of the column-scaled Jacobian rather than the
/// normal equations, which would square its condition number.
fn levenberg_marquardt(mut p: Params, times: &[f64], values: &[f64], nyquist: f64) -> (Params, bool) {
    let n = times.len();
    let mut lambda = 1e-3;
    let mut c = cost(&p, times, values);
    let scale: f64 = values.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_ITERATIONS {
        if c <= 1e-30 * scale {
            return (p, true);
        }
        let mut jac = DMatrix::zeros(n, 5);
        let mut r = DVector::zeros(n);
        for (i, (&t, &y)) in times.iter().zip(values).enumerate() {
            jac.set_row(i, &gradient(&p, t).transpose());
            r[i] = y - model(&p, t);
        }
        let norms: Vec<f64> = (0..5).map(|k| jac.column(k).norm().max(1e-300)).collect();
        for (k, &norm) in norms.iter().enumerate() {
            jac.column_mut(k).unscale_mut(norm);
        }
        let svd = jac.svd(true, true);
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
            return (p, false);
        };
        let sv = svd.singular_values;
        let utr = u.transpose() * &r;
        let s_max = sv.max();
        let mut improved = false;
        while lambda < 1e16 {
            let damp = lambda * s_max * s_max;
            let mut step = Params::zeros();
            for k in 0..sv.len() {
                let sk = sv[k];
                if sk > 1e-15 * s_max {
                    let coef = sk * utr[k] / (sk * sk + damp);
                    for m in 0..5 {
                        step[m] += v_t[(k, m)] * coef;
                    }
                }
            }
            for m in 0..5 {
                step[m] /= norms[m];
            }
            let trial = p + step;
            if trial[2].abs() > nyquist {
                lambda *= 10.0;
                continue;
            }
            let ct = cost(&trial, times, values);
            if ct.is_finite() && ct < c {
                let rel = (c - ct) / c;
                let small_step = step.norm() <= 1e-14 * (p.norm() + 1e-14);
                p = trial;
                c = ct;
                lambda = (lambda / 10.0).max(1e-18);
                improved = true;
                if rel < 1e-15 || small_step {
                    return (p, true);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left: a (local) minimum to working precision.
            return (p, true);
        }
    }
    (p, false)
}

/// Enforces `A ≥ 0`, `ω ≥ 0` and `φ ∈ (−π, π]`.
fn canonical(mut p: Params, rms: f64, converged: bool) -> DampedSineFit {
    if p[2] < 0.0 {
        p[2] = -p[2];
        p[3] = -p[3];
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[3] += PI;
    }
    let mut phase = p[3].rem_euclid(2.0 * PI);
    if phase > PI {
        phase -= 2.0 * PI;
    }
    DampedSineFit {
        amplitude: p[0],
        gamma: p[1],
        omega: p[2],
        phase,
        offset: p[4],
        residual_rms: rms,
        converged,
    }
}
