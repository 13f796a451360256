//! Stand-ins with the shapes of the benchmark datasets, for when the real
//! files are not available. They are physically or statistically motivated
//! but are not the real data; results on them are not comparable with
//! published numbers.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma, Normal};

use crate::data::{synth_regression, window_timeseries, Dataset};
use crate::error::Result;
use crate::matrix::Matrix;

fn normal(mean: f64, std: f64) -> Normal<f64> {
    Normal::new(mean, std).expect("finite positive std")
}

/// Airfoil self-noise style data: features (frequency, angle of attack,
/// chord, velocity, displacement thickness), label a sound pressure level in
/// dB derived from a simplified turbulent boundary-layer trailing-edge model.
pub fn airfoil_like(n: usize, seed: u64) -> Result<Dataset> {
    const VELOCITIES: [f64; 4] = [31.7, 39.6, 55.5, 71.3];
    const CHORDS: [f64; 6] = [0.0254, 0.0508, 0.1016, 0.1524, 0.2286, 0.3048];
    let mut rng = StdRng::seed_from_u64(seed);
    let measurement = normal(0.0, 1.5);
    let mut xs = Vec::with_capacity(n * 5);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u = VELOCITIES[rng.random_range(0..VELOCITIES.len())];
        let c = CHORDS[rng.random_range(0..CHORDS.len())];
        let alpha = 22.2 * rng.random::<f64>().powf(1.5);
        let f = 10f64.powf(rng.random_range(200f64.log10()..20000f64.log10()));

        let reynolds = u * c / 1.5e-5;
        let lr = reynolds.log10();
        let delta0 = c * 10f64.powf(3.411 - 1.5397 * lr + 0.1059 * lr * lr);
        let delta = (delta0 * 10f64.powf(0.0679 * alpha)).min(0.058);
        let mach = u / 340.0;

        let strouhal = f * delta / u;
        let tilt = if alpha > 1.33 {
            0.0054 * (alpha - 1.33).powi(2)
        } else {
            0.0
        };
        let peak = 0.02 * mach.powf(-0.6) * 10f64.powf(tilt);
        let dist = (strouhal / peak).log10().abs();
        let shape = -18.0 * dist * dist / (1.0 + dist);
        let k1 = if reynolds < 247_000.0 {
            -4.31 * lr + 156.3
        } else if reynolds < 800_000.0 {
            -9.0 * lr + 181.6
        } else {
            128.5
        };
        let spl = 10.0 * (delta * mach.powi(5) * 0.4572 / (1.22 * 1.22)).log10() + shape + k1 - 3.0;

        xs.extend_from_slice(&[f, alpha, c, u, delta]);
        ys.push(spl + 71.0 + measurement.sample(&mut rng));
    }
    let names = [
        "frequency",
        "angle_of_attack",
        "chord_length",
        "velocity",
        "displacement_thickness",
    ];
    Ok(Dataset::new(
        Matrix::from_vec(n, 5, xs)?,
        Matrix::column_vector(&ys),
        format!("airfoil_like:seed{seed}"),
    )?
    .with_feature_names(names.iter().map(|s| s.to_string()).collect()))
}

/// Hourly roadside NO2 style data with seven traffic/weather features and a
/// log-concentration label.
pub fn no2_like(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = StdRng::seed_from_u64(seed);
    let unit = normal(0.0, 1.0);
    let wind_dist = Gamma::new(2.5, 1.3).expect("valid gamma");
    let mut xs = Vec::with_capacity(n * 7);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let hour = rng.random_range(1..=24) as f64;
        let daytime = (1.0 - (std::f64::consts::TAU * (hour - 4.0) / 24.0).cos()) / 2.0;
        let log_cars = 5.2 + 2.2 * daytime + 0.4 * unit.sample(&mut rng);
        let temp = 1.0 + 6.0 * unit.sample(&mut rng);
        let wind: f64 = wind_dist.sample(&mut rng);
        let temp_diff = 0.2 - 0.1 * wind + unit.sample(&mut rng);
        let direction = rng.random_range(0.0..360.0);
        let day = rng.random_range(32.0..=608.0);
        let y = 1.7 + 0.33 * log_cars - 0.012 * temp - 0.12 * wind
            + 0.17 * temp_diff * (-wind / 4.0).exp()
            + 0.08 * f64::to_radians(direction).sin()
            + 0.0002 * day
            + 0.5 * unit.sample(&mut rng);
        xs.extend_from_slice(&[log_cars, temp, wind, temp_diff, direction, hour, day]);
        ys.push(y);
    }
    let names = [
        "log_cars",
        "temperature",
        "wind_speed",
        "temperature_diff",
        "wind_direction",
        "hour",
        "day",
    ];
    Ok(Dataset::new(
        Matrix::from_vec(n, 7, xs)?,
        Matrix::column_vector(&ys),
        format!("no2_like:seed{seed}"),
    )?
    .with_feature_names(names.iter().map(|s| s.to_string()).collect()))
}

/// 226 features, 4 labels on a thickness-like scale.
pub fn spectrum_like(n: usize, seed: u64) -> Result<Dataset> {
    let (ds, _) = synth_regression(n, 226, 4, seed)?;
    let mut y = ds.y.clone();
    for v in y.as_mut_slice() {
        *v = 100.0 + 40.0 * *v;
    }
    let mut out = ds.with_labels(y)?;
    out.origin = format!("spectrum_like:seed{seed}");
    Ok(out)
}

/// Eight correlated positive random walks, windowed into (window x 8) inputs.
pub fn exchange_like(length: usize, window: usize, horizon: usize, seed: u64) -> Result<Dataset> {
    let series = exchange_series(length, seed)?;
    let mut ds = window_timeseries(&series, window, horizon)?;
    ds.origin = format!("exchange_like:seed{seed}");
    Ok(ds)
}

/// The raw `length x 8` series behind [`exchange_like`].
pub fn exchange_series(length: usize, seed: u64) -> Result<Matrix> {
    const CHANNELS: usize = 8;
    let mut rng = StdRng::seed_from_u64(seed);
    let step = normal(0.0, 1.0);
    let mut level: Vec<f64> = (0..CHANNELS).map(|_| rng.random_range(-1.5..0.5)).collect();
    let mut data = Vec::with_capacity(length * CHANNELS);
    for _ in 0..length {
        let common = step.sample(&mut rng);
        for l in level.iter_mut() {
            *l += 0.004 * (0.5 * common + step.sample(&mut rng));
            data.push(l.exp());
        }
    }
    Matrix::from_vec(length, CHANNELS, data)
}
