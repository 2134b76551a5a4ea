use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::sinc;
use crate::sim::{Mpc, MpcList, RadioConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCir {
    /// `|h(origin + t / fs)|` for `t = 0..T`.
    pub magnitudes: Vec<f64>,
    /// Earliest delay plus ToA noise; `None` when no path arrives.
    pub first_path_toa: Option<f64>,
}

/// Render the magnitude CIR of `mpcs` on the grid `origin + t / fs`,
/// `t = 0..cir_length`.
///
/// `h(t) = Σ a_n sinc(B (t − T_n)) + w(t)` with `sinc(x) = sin(x) / x` and
/// circular complex Gaussian noise `w` of std `noise_std`. Random draws, in
/// order: `2T` noise normals (real then imaginary per sample), then one ToA
/// normal. Zero-std sources consume no draws.
pub fn simulate_cir<R: Rng + ?Sized>(mpcs: &MpcList, radio: &RadioConfig, origin: f64, rng: &mut R) -> Result<SimulatedCir> {
    let t = radio.cir_length;
    let end = origin + t as f64 / radio.sample_rate;
    for (index, m) in mpcs.paths.iter().enumerate() {
        if !(m.delay >= origin && m.delay < end) {
            return Err(Error::DelayOutsideWindow { index, delay: m.delay, start: origin, end });
        }
    }
    let mut field = vec![Complex64::new(0.0, 0.0); t];
    superpose(&mpcs.paths, radio, origin, &mut field);
    if radio.noise_std > 0.0 {
        let s = radio.noise_std * core::f64::consts::FRAC_1_SQRT_2;
        for h in field.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *h += Complex64::new(s * re, s * im);
        }
    }
    let first_path_toa = mpcs.first_delay().map(|d| {
        if radio.toa_noise_std > 0.0 {
            let n: f64 = StandardNormal.sample(rng);
            d + radio.toa_noise_std * n
        } else {
            d
        }
    });
    Ok(SimulatedCir { magnitudes: field.iter().map(|h| h.norm()).collect(), first_path_toa })
}

fn superpose(paths: &[Mpc], radio: &RadioConfig, origin: f64, field: &mut [Complex64]) {
    let ts = radio.sample_period();
    for m in paths {
        for (i, h) in field.iter_mut().enumerate() {
            let t = origin + i as f64 * ts;
            *h += m.gain * sinc(radio.bandwidth * (t - m.delay));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn radio() -> RadioConfig {
        RadioConfig { cir_length: 64, ..RadioConfig::default() }.noiseless()
    }

    #[test]
    fn on_grid_peak_is_exact() {
        let r = radio();
        let mpcs = MpcList::new(vec![Mpc { delay: 10e-9, gain: Complex64::new(1.0, 0.0) }]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cir = simulate_cir(&mpcs, &r, 0.0, &mut rng).unwrap();
        assert_eq!(cir.magnitudes[10], 1.0);
        let peak = cir.magnitudes.iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, 1.0);
        assert_eq!(cir.first_path_toa, Some(10e-9));
    }

    #[test]
    fn empty_list_gives_zero_and_no_toa() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cir = simulate_cir(&MpcList::default(), &radio(), 0.0, &mut rng).unwrap();
        assert!(cir.magnitudes.iter().all(|&m| m == 0.0));
        assert_eq!(cir.first_path_toa, None);
    }

    #[test]
    fn delay_past_window_is_named() {
        let mpcs = MpcList::new(vec![
            Mpc { delay: 1e-9, gain: Complex64::new(1.0, 0.0) },
            Mpc { delay: 70e-9, gain: Complex64::new(1.0, 0.0) },
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = simulate_cir(&mpcs, &radio(), 0.0, &mut rng).unwrap_err();
        assert!(matches!(err, Error::DelayOutsideWindow { index: 1, .. }));
    }

    #[test]
    fn off_grid_pair_matches_direct_formula() {
        let r = radio();
        let a = Complex64::from_polar(0.8, 0.3);
        let b = Complex64::from_polar(0.5, -2.0);
        let (ta, tb) = (12.37e-9, 17.91e-9);
        let mpcs = MpcList::new(vec![Mpc { delay: tb, gain: b }, Mpc { delay: ta, gain: a }]);
        let origin = 2.5e-9;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cir = simulate_cir(&mpcs, &r, origin, &mut rng).unwrap();
        for (i, &m) in cir.magnitudes.iter().enumerate() {
            let t = origin + i as f64 / r.sample_rate;
            let x = |d: f64| {
                let arg = r.bandwidth * (t - d);
                if arg == 0.0 { 1.0 } else { arg.sin() / arg }
            };
            let want = (a * x(ta) + b * x(tb)).norm();
            assert!((m - want).abs() < 1e-12, "sample {i}: {m} vs {want}");
        }
    }

    #[test]
    fn noise_level_matches_std() {
        let r = RadioConfig { cir_length: 4096, noise_std: 0.1, ..radio() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cir = simulate_cir(&MpcList::default(), &r, 0.0, &mut rng).unwrap();
        let power = cir.magnitudes.iter().map(|m| m * m).sum::<f64>() / 4096.0;
        assert!((power - 0.01).abs() < 0.001, "{power}");
    }

    proptest::proptest! {
        #[test]
        fn single_path_peak_at_rounded_delay(delay_ns in 0.0f64..60.0, phase in 0.0f64..core::f64::consts::TAU) {
            let r = radio();
            let mpcs = MpcList::new(vec![Mpc { delay: delay_ns * 1e-9, gain: Complex64::from_polar(1.0, phase) }]);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let cir = simulate_cir(&mpcs, &r, 0.0, &mut rng).unwrap();
            let argmax = cir.magnitudes.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            // Exact half-sample ties may go either way.
            let frac = delay_ns - delay_ns.floor();
            if (frac - 0.5).abs() > 1e-6 {
                proptest::prop_assert_eq!(argmax, delay_ns.round() as usize);
            }
        }
    }
}
