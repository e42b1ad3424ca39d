//! Closed-form state, derivative, displacement, and least-squares fitting for
//! the three built-in activity models.
//!
//! Each model describes the time evolution `z(t)` of one state variable:
//!
//! * sinusoidal: `ż(t) = πA/(2T)·sin(π(t−t0)/T)` on `t ∈ [t0, t0+T]`, `z(t0) = z0`,
//!   which integrates to `z(t) = z0 + (A/2)(1 − cos(π(t−t0)/T))`
//! * linear: `ż(t) = s`, `z(t0) = z0`
//! * constant: `z(t) = z0`
//!
//! Displacement is the exact integral `∫ z(τ) dτ`, used to advance a position
//! when the modeled variable is a speed.

use crate::scalar::Real;

use super::{DomainPolicy, DynamicsError};

fn ensure_finite<T: Real>(values: &[T]) -> Result<(), DynamicsError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    Ok(())
}

/// Checks sample preconditions shared by all fits: at least `min` samples,
/// strictly increasing times, finite values.
fn check_samples<T: Real>(samples: &[(T, T)], min: usize) -> Result<(), DynamicsError> {
    if samples.len() < min {
        return Err(DynamicsError::DegenerateSamples(format!(
            "need at least {min} samples, got {}",
            samples.len()
        )));
    }
    for (t, z) in samples {
        if !t.is_finite() || !z.is_finite() {
            return Err(DynamicsError::NonFinite);
        }
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(DynamicsError::DegenerateSamples(
            "sample times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn rms<T: Real>(residuals: impl Iterator<Item = T>, n: usize) -> T {
    let sum_sq = residuals.fold(T::zero(), |acc, r| acc + r * r);
    (sum_sq / T::from_usize(n).unwrap()).sqrt()
}

/// Solves the 2×2 normal equations for `z ≈ c0 + c1·g` over `(g_i, z_i)`.
fn linear_ls_2<T: Real>(points: impl Iterator<Item = (T, T)> + Clone) -> Result<(T, T), DynamicsError> {
    let mut n = T::zero();
    let (mut sg, mut sz, mut sgg, mut sgz) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (g, z) in points {
        n = n + T::one();
        sg = sg + g;
        sz = sz + z;
        sgg = sgg + g * g;
        sgz = sgz + g * z;
    }
    let det = n * sgg - sg * sg;
    if det.abs() <= T::epsilon() * n * n {
        return Err(DynamicsError::DegenerateSamples(
            "basis values do not vary across samples".into(),
        ));
    }
    let c1 = (n * sgz - sg * sz) / det;
    let c0 = (sz - c1 * sg) / n;
    Ok((c0, c1))
}

/// Sinusoidal model: smooth S-curve from `z0` at `t0` to `z0 + A` at `t0 + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoidal<T> {
    pub amplitude: T,
    pub duration: T,
    pub start_time: T,
    pub start_value: T,
}

impl<T: Real> Sinusoidal<T> {
    pub fn new(amplitude: T, duration: T, start_time: T, start_value: T) -> Result<Self, DynamicsError> {
        ensure_finite(&[amplitude, duration, start_time, start_value])?;
        if duration <= T::zero() {
            return Err(DynamicsError::InvalidParams(format!(
                "sinusoidal duration must be positive, got {}",
                duration.as_f64()
            )));
        }
        Ok(Self { amplitude, duration, start_time, start_value })
    }

    pub fn end_time(&self) -> T {
        self.start_time + self.duration
    }

    fn admit(&self, t: T, policy: DomainPolicy) -> Result<T, DynamicsError> {
        let (lo, hi) = (self.start_time, self.end_time());
        if t >= lo && t <= hi {
            return Ok(t);
        }
        match policy {
            DomainPolicy::Clamp => Ok(if t < lo { lo } else { hi }),
            DomainPolicy::Error => Err(DynamicsError::OutOfDomain {
                t: t.as_f64(),
                lo: Some(lo.as_f64()),
                hi: Some(hi.as_f64()),
            }),
        }
    }

    pub fn state_with(&self, t: T, policy: DomainPolicy) -> Result<T, DynamicsError> {
        let t = self.admit(t, policy)?;
        // Evaluate the endpoint exactly: z(t0+T) = z0 + A.
        if t == self.end_time() {
            return Ok(self.start_value + self.amplitude);
        }
        let phase = T::PI() * (t - self.start_time) / self.duration;
        Ok(self.start_value + self.amplitude * T::half() * (T::one() - phase.cos()))
    }

    pub fn state(&self, t: T) -> Result<T, DynamicsError> {
        self.state_with(t, DomainPolicy::Error)
    }

    pub fn derivative_with(&self, t: T, policy: DomainPolicy) -> Result<T, DynamicsError> {
        let t = self.admit(t, policy)?;
        // sin(π) does not round to zero; pin both endpoints.
        if t == self.end_time() || t == self.start_time {
            return Ok(T::zero());
        }
        let phase = T::PI() * (t - self.start_time) / self.duration;
        Ok(T::PI() * self.amplitude / (T::two() * self.duration) * phase.sin())
    }

    pub fn derivative(&self, t: T) -> Result<T, DynamicsError> {
        self.derivative_with(t, DomainPolicy::Error)
    }

    /// Antiderivative of the state, used by [`Self::displacement`].
    fn state_integral(&self, t: T) -> T {
        let phase = T::PI() * (t - self.start_time) / self.duration;
        let mean = self.start_value + self.amplitude * T::half();
        mean * t - self.amplitude * T::half() * self.duration / T::PI() * phase.sin()
    }

    pub fn displacement(&self, t_a: T, t_b: T) -> Result<T, DynamicsError> {
        let t_a = self.admit(t_a, DomainPolicy::Error)?;
        let t_b = self.admit(t_b, DomainPolicy::Error)?;
        if t_b < t_a {
            return Err(DynamicsError::OutOfDomain {
                t: t_b.as_f64(),
                lo: Some(t_a.as_f64()),
                hi: None,
            });
        }
        Ok(self.state_integral(t_b) - self.state_integral(t_a))
    }

    /// Least-squares fit with `t0` pinned to the first sample time and `T` to
    /// the sample span; `(z0, A)` then solve linearly on the closed form.
    pub fn fit(samples: &[(T, T)]) -> Result<(Self, T), DynamicsError> {
        check_samples(samples, 4)?;
        let start_time = samples[0].0;
        let duration = samples[samples.len() - 1].0 - start_time;
        let basis = |t: T| {
            let phase = T::PI() * (t - start_time) / duration;
            T::half() * (T::one() - phase.cos())
        };
        let (start_value, amplitude) =
            linear_ls_2(samples.iter().map(|&(t, z)| (basis(t), z)))?;
        let model = Self::new(amplitude, duration, start_time, start_value)?;
        let residual = rms(
            samples.iter().map(|&(t, z)| z - model.state(t).unwrap()),
            samples.len(),
        );
        Ok((model, residual))
    }
}

/// Linear model: constant slope `s` from `z0` at `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear<T> {
    pub slope: T,
    pub start_time: T,
    pub start_value: T,
}

impl<T: Real> Linear<T> {
    pub fn new(slope: T, start_time: T, start_value: T) -> Result<Self, DynamicsError> {
        ensure_finite(&[slope, start_time, start_value])?;
        Ok(Self { slope, start_time, start_value })
    }

    fn admit(&self, t: T, policy: DomainPolicy) -> Result<T, DynamicsError> {
        if t >= self.start_time {
            return Ok(t);
        }
        match policy {
            DomainPolicy::Clamp => Ok(self.start_time),
            DomainPolicy::Error => Err(DynamicsError::OutOfDomain {
                t: t.as_f64(),
                lo: Some(self.start_time.as_f64()),
                hi: None,
            }),
        }
    }

    pub fn state_with(&self, t: T, policy: DomainPolicy) -> Result<T, DynamicsError> {
        let t = self.admit(t, policy)?;
        Ok(self.start_value + self.slope * (t - self.start_time))
    }

    pub fn state(&self, t: T) -> Result<T, DynamicsError> {
        self.state_with(t, DomainPolicy::Error)
    }

    pub fn derivative_with(&self, t: T, policy: DomainPolicy) -> Result<T, DynamicsError> {
        self.admit(t, policy)?;
        Ok(self.slope)
    }

    pub fn derivative(&self, t: T) -> Result<T, DynamicsError> {
        self.derivative_with(t, DomainPolicy::Error)
    }

    pub fn displacement(&self, t_a: T, t_b: T) -> Result<T, DynamicsError> {
        let t_a = self.admit(t_a, DomainPolicy::Error)?;
        let t_b = self.admit(t_b, DomainPolicy::Error)?;
        if t_b < t_a {
            return Err(DynamicsError::OutOfDomain {
                t: t_b.as_f64(),
                lo: Some(t_a.as_f64()),
                hi: None,
            });
        }
        let (da, db) = (t_a - self.start_time, t_b - self.start_time);
        Ok(self.start_value * (t_b - t_a) + self.slope * T::half() * (db * db - da * da))
    }

    /// Least-squares fit with `t0` pinned to the first sample time.
    pub fn fit(samples: &[(T, T)]) -> Result<(Self, T), DynamicsError> {
        check_samples(samples, 3)?;
        let start_time = samples[0].0;
        let (start_value, slope) =
            linear_ls_2(samples.iter().map(|&(t, z)| (t - start_time, z)))?;
        let model = Self::new(slope, start_time, start_value)?;
        let residual = rms(
            samples.iter().map(|&(t, z)| z - model.state(t).unwrap()),
            samples.len(),
        );
        Ok((model, residual))
    }
}

/// Constant model: `z(t) = z0` for all t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant<T> {
    pub value: T,
}

impl<T: Real> Constant<T> {
    pub fn new(value: T) -> Result<Self, DynamicsError> {
        ensure_finite(&[value])?;
        Ok(Self { value })
    }

    pub fn state(&self, _t: T) -> Result<T, DynamicsError> {
        Ok(self.value)
    }

    pub fn derivative(&self, _t: T) -> Result<T, DynamicsError> {
        Ok(T::zero())
    }

    pub fn displacement(&self, t_a: T, t_b: T) -> Result<T, DynamicsError> {
        if t_b < t_a {
            return Err(DynamicsError::OutOfDomain {
                t: t_b.as_f64(),
                lo: Some(t_a.as_f64()),
                hi: None,
            });
        }
        Ok(self.value * (t_b - t_a))
    }

    /// Least-squares fit: the sample mean.
    pub fn fit(samples: &[(T, T)]) -> Result<(Self, T), DynamicsError> {
        check_samples(samples, 2)?;
        let n = T::from_usize(samples.len()).unwrap();
        let mean = samples.iter().fold(T::zero(), |acc, &(_, z)| acc + z) / n;
        let model = Self::new(mean)?;
        let residual = rms(samples.iter().map(|&(_, z)| z - mean), samples.len());
        Ok((model, residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn braking() -> Sinusoidal<f64> {
        // The worked braking profile: 8 m/s to standstill in 4 s.
        Sinusoidal::new(-8.0, 4.0, 0.0, 8.0).unwrap()
    }

    #[test]
    fn sinusoidal_hits_initial_and_final_values_exactly() {
        let m = braking();
        assert_eq!(m.state(0.0).unwrap(), 8.0);
        assert_eq!(m.state(4.0).unwrap(), 0.0);
        assert_eq!(m.derivative(0.0).unwrap(), 0.0);
        assert_eq!(m.derivative(4.0).unwrap(), 0.0);
    }

    #[test]
    fn sinusoidal_midpoint() {
        let m = braking();
        assert!((m.state(2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((m.derivative(2.0).unwrap() + std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn sinusoidal_displacement_matches_stopping_distance() {
        let m = braking();
        assert!((m.displacement(0.0, 4.0).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn sinusoidal_rejects_nonpositive_duration() {
        assert!(matches!(
            Sinusoidal::new(-8.0, 0.0, 0.0, 8.0),
            Err(DynamicsError::InvalidParams(_))
        ));
    }

    #[test]
    fn sinusoidal_domain_policy() {
        let m = braking();
        assert!(matches!(m.state(-0.5), Err(DynamicsError::OutOfDomain { .. })));
        assert!(matches!(m.state(4.5), Err(DynamicsError::OutOfDomain { .. })));
        assert_eq!(m.state_with(-0.5, DomainPolicy::Clamp).unwrap(), 8.0);
        assert_eq!(m.state_with(9.0, DomainPolicy::Clamp).unwrap(), 0.0);
    }

    #[test]
    fn linear_state_and_displacement() {
        // The worked acceleration profile: 1.5 m/s² from rest at t = 7 s.
        let m = Linear::<f64>::new(1.5, 7.0, 0.0).unwrap();
        assert!((m.state(12.0).unwrap() - 7.5).abs() < 1e-12);
        assert!((m.displacement(7.0, 12.0).unwrap() - 18.75).abs() < 1e-12);
        assert!(matches!(m.state(6.9), Err(DynamicsError::OutOfDomain { .. })));
    }

    #[test]
    fn constant_is_flat() {
        let m = Constant::new(0.0).unwrap();
        assert_eq!(m.state(123.0).unwrap(), 0.0);
        assert_eq!(m.derivative(5.0).unwrap(), 0.0);
        assert_eq!(m.displacement(1.0, 9.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_fit_recovers_exact_samples() {
        let truth = Linear::new(1.5, 7.0, 0.0).unwrap();
        let samples: Vec<(f64, f64)> = (0..=50)
            .map(|i| {
                let t = 7.0 + 0.1 * i as f64;
                (t, truth.state(t).unwrap())
            })
            .collect();
        let (fit, residual) = Linear::fit(&samples).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-9);
        assert!((fit.start_value - 0.0).abs() < 1e-9);
        assert_eq!(fit.start_time, 7.0);
        assert!(residual < 1e-9);
    }

    #[test]
    fn constant_fit_averages_symmetric_noise() {
        let samples: Vec<(f64, f64)> = vec![(0.0, 5.0), (1.0, 5.1), (2.0, 4.9), (3.0, 5.0)];
        let (fit, residual) = Constant::fit(&samples).unwrap();
        assert!((fit.value - 5.0).abs() < 1e-12);
        assert!(residual > 0.0);
    }

    #[test]
    fn sinusoidal_fit_recovers_braking_profile() {
        let truth = braking();
        let samples: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let t = 0.1 * i as f64;
                (t, truth.state(t).unwrap())
            })
            .collect();
        let (fit, residual) = Sinusoidal::fit(&samples).unwrap();
        assert!((fit.amplitude + 8.0).abs() < 1e-6);
        assert!((fit.start_value - 8.0).abs() < 1e-6);
        assert!(residual < 1e-6);
    }

    #[test]
    fn fit_rejects_degenerate_samples() {
        assert!(matches!(
            Linear::<f64>::fit(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]),
            Err(DynamicsError::DegenerateSamples(_))
        ));
        assert!(matches!(
            Constant::<f64>::fit(&[(0.0, 1.0)]),
            Err(DynamicsError::DegenerateSamples(_))
        ));
        assert!(matches!(
            Linear::<f64>::fit(&[(0.0, f64::NAN), (1.0, 2.0), (2.0, 3.0)]),
            Err(DynamicsError::NonFinite)
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let m = Sinusoidal::<f32>::new(-8.0, 4.0, 0.0, 8.0).unwrap();
        assert_eq!(m.state(4.0).unwrap(), 0.0);
        assert!((m.state(2.0).unwrap() - 4.0).abs() < 1e-5);
    }
}
