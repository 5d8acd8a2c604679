#![allow(dead_code)]

use goodwill::dynamics::{ControlSignal, ControlValues};
use goodwill::spectral::{DomainSpec, ModeIndex, SpectralField};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random field using only modes `m <= mm`, `n <= nn`, nonnegative everywhere.
///
/// Every normalised eigenfunction is bounded by `2 / sqrt(|Xi|)`, so a
/// constant part dominating the sum of the other coefficients suffices.
pub fn random_nonneg_field(d: &DomainSpec, mm: usize, nn: usize, amp: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(d);
    let mut bound = 0.0;
    for m in 0..=mm.min(d.modes_m) {
        for n in 0..=nn.min(d.modes_n) {
            if m + n == 0 {
                continue;
            }
            let c: f64 = amp * rng.sample::<f64, _>(StandardNormal);
            f.set(ModeIndex::new(m, n), c);
            bound += c.abs();
        }
    }
    let area = d.area();
    let floor = rng.random_range(0.0..0.5);
    f.set(ModeIndex::new(0, 0), bound * 2.0 + floor * area.sqrt());
    f
}

/// Random spectral field with normal coefficients.
pub fn random_field(d: &DomainSpec, amp: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let coeffs = (0..d.mode_count()).map(|_| amp * rng.sample::<f64, _>(StandardNormal)).collect();
    SpectralField::from_coeffs(d, coeffs).unwrap()
}

/// Random spectral control sampled on `times`, rescaled to `norm`.
pub fn random_control(d: &DomainSpec, times: &[f64], norm: f64, rng: &mut ChaCha8Rng) -> ControlSignal {
    let fields: Vec<SpectralField> = times.iter().map(|_| random_field(d, 1.0, rng)).collect();
    let u = ControlSignal::new(times.to_vec(), ControlValues::Spectral(fields)).unwrap();
    let q = goodwill::spectral::Quadrature::new(d);
    let s = norm / u.norm(&q).unwrap();
    let fields = u.spectral_samples().unwrap().iter().map(|f| f.scaled(s)).collect();
    ControlSignal::new(times.to_vec(), ControlValues::Spectral(fields)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
