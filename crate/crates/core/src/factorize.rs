//! Exact single-product factorization of vibronic eigenstates.
//!
//! A two-component state `(χ₁, χ₂)` is written as `χ̄ (cos θ, sin θ)` with the
//! nodeless amplitude `χ̄ = √(χ₁² + χ₂²)`. The state-specific potential
//!
//! ```text
//! Ē = Σ_α (ω_α/2) (∂θ/∂Q_α)²  +  (χ₁² v11 + 2χ₁χ₂ v12 + χ₂² v22) / (χ₁² + χ₂²)
//!     └──── spike part ────┘     └──────────── potential part ────────────┘
//! ```
//!
//! makes `χ̄` the ground state of `T + Ē` with eigenvalue `E`. The angle
//! gradient uses `∂θ = (χ₁∂χ₂ − χ₂∂χ₁)/(χ₁² + χ₂²)` with band-limited
//! derivatives of the components, so no angle field is ever unwrapped.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::eigen::{solve, EigenResult, SolverOptions};
use crate::error::{Error, Result};
use crate::field::{ScalarField, TwoComponentField, VibronicState};
use crate::grid::ProductGrid;
use crate::hamiltonian::{surface_states, SurfaceHamiltonian};
use crate::model::{diabatic_fields, DiabaticFields, ModelParams};

/// Points with `χ₁² + χ₂²` below this fraction of the maximum are masked.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

/// Default ceiling for the exact potential, eV.
pub const DEFAULT_CAP: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorizeOptions {
    /// Ceiling for the exact potential, eV.
    pub cap: f64,
    /// Relative density floor below which points are masked.
    pub floor: f64,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            floor: AMPLITUDE_FLOOR,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FactorizedState {
    pub energy: f64,
    pub theta: ScalarField,
    /// `χ̄`, non-negative and quadrature-normalized.
    pub amplitude: ScalarField,
    pub c1: ScalarField,
    pub c2: ScalarField,
    pub exact_potential: ScalarField,
    pub spike_part: ScalarField,
    pub potential_part: ScalarField,
    pub defined: Vec<bool>,
    /// `c1 · amplitude · norm_factor = χ₁`, likewise for `χ₂`.
    pub norm_factor: f64,
    pub cap: f64,
    /// Largest spike value before capping, over defined points.
    pub raw_spike_max: f64,
}

impl FactorizedState {
    pub fn defined_count(&self) -> usize {
        self.defined.iter().filter(|d| **d).count()
    }
}

/// Pointwise pieces of the exact potential.
#[derive(Clone, Debug)]
pub struct PotentialPieces {
    pub potential_part: Array1<f64>,
    pub spike_part: Array1<f64>,
    pub exact: Array1<f64>,
    pub defined: Vec<bool>,
    pub raw_spike_max: f64,
}

/// Exact potential from coefficient fields `(χ₁, χ₂)` and their gradients.
///
/// Only the ratio `χ₂/χ₁` and its derivatives enter, so any common scale of
/// the inputs cancels. Masked points get `cap` as potential part and a zero
/// spike. Elsewhere the spike is clipped so that the sum stays at or below
/// `cap`.
pub fn exact_potential_from_components(
    chi1: &Array1<f64>,
    chi2: &Array1<f64>,
    grad1: &[Array1<f64>],
    grad2: &[Array1<f64>],
    omegas: &[f64],
    v: &DiabaticFields,
    opts: &FactorizeOptions,
) -> PotentialPieces {
    let n = chi1.len();
    let rho = chi1 * chi1 + chi2 * chi2;
    let threshold = opts.floor * rho.iter().cloned().fold(0.0, f64::max);
    let mut out = PotentialPieces {
        potential_part: Array1::zeros(n),
        spike_part: Array1::zeros(n),
        exact: Array1::zeros(n),
        defined: vec![true; n],
        raw_spike_max: 0.0,
    };
    for i in 0..n {
        let r = rho[i];
        if !(r > threshold) {
            out.defined[i] = false;
            out.potential_part[i] = opts.cap;
            out.exact[i] = opts.cap;
            continue;
        }
        let (a, b) = (chi1[i], chi2[i]);
        let pot = (a * a * v.v11[i] + 2.0 * a * b * v.v12[i] + b * b * v.v22[i]) / r;
        let mut spike = 0.0;
        for ((g1, g2), w) in grad1.iter().zip(grad2).zip(omegas) {
            let dtheta = (a * g2[i] - b * g1[i]) / r;
            spike += 0.5 * w * dtheta * dtheta;
        }
        out.raw_spike_max = out.raw_spike_max.max(spike);
        let spike = spike.min((opts.cap - pot).max(0.0));
        out.potential_part[i] = pot;
        out.spike_part[i] = spike;
        out.exact[i] = pot + spike;
    }
    out
}

/// Factorizes a state on its own grid.
pub fn factorize_state(
    state: &VibronicState,
    params: &ModelParams,
    grid: &ProductGrid,
    opts: &FactorizeOptions,
) -> Result<FactorizedState> {
    check_len(grid, state.field.len())?;
    let interp = grid.self_interpolator();
    let (_, g1) = interp.apply(state.field.chi1.view());
    let (_, g2) = interp.apply(state.field.chi2.view());
    Ok(assemble(state.energy, &state.field, &g1, &g2, params, grid, opts))
}

/// Factorizes a state after band-limited interpolation onto `target`.
pub fn factorize_on(
    state: &VibronicState,
    params: &ModelParams,
    source: &ProductGrid,
    target: &ProductGrid,
    opts: &FactorizeOptions,
) -> Result<FactorizedState> {
    check_len(source, state.field.len())?;
    let interp = source.interpolator(target)?;
    let (c1, g1) = interp.apply(state.field.chi1.view());
    let (c2, g2) = interp.apply(state.field.chi2.view());
    let field = TwoComponentField::new(c1, c2);
    Ok(assemble(state.energy, &field, &g1, &g2, params, target, opts))
}

fn check_len(grid: &ProductGrid, len: usize) -> Result<()> {
    if len != grid.total_size() {
        return Err(Error::ShapeMismatch {
            expected: grid.total_size(),
            actual: len,
        });
    }
    Ok(())
}

fn assemble(
    energy: f64,
    field: &TwoComponentField,
    g1: &[Array1<f64>],
    g2: &[Array1<f64>],
    params: &ModelParams,
    grid: &ProductGrid,
    opts: &FactorizeOptions,
) -> FactorizedState {
    let v = diabatic_fields(params, grid);
    let omegas: Vec<f64> = grid.axes().iter().map(|a| a.omega()).collect();
    let pieces = exact_potential_from_components(&field.chi1, &field.chi2, g1, g2, &omegas, &v, opts);

    let rho = field.density();
    let norm = (grid.cell_volume() * rho.sum()).sqrt();
    let amplitude = rho.mapv(|r| r.sqrt() / norm);
    let theta = field
        .chi1
        .iter()
        .zip(field.chi2.iter())
        .map(|(a, b)| b.atan2(*a))
        .collect::<Array1<f64>>();
    let (c1, c2): (Vec<f64>, Vec<f64>) = field
        .chi1
        .iter()
        .zip(field.chi2.iter())
        .zip(&theta)
        .map(|((a, b), t)| {
            let r = (a * a + b * b).sqrt();
            if r > 0.0 {
                (a / r, b / r)
            } else {
                (t.cos(), t.sin())
            }
        })
        .unzip();
    let mask = pieces.defined.clone();
    let masked = |values: Array1<f64>| ScalarField::with_mask(values, mask.clone());
    FactorizedState {
        energy,
        theta: masked(theta),
        amplitude: ScalarField::new(amplitude),
        c1: masked(c1.into()),
        c2: masked(c2.into()),
        exact_potential: masked(pieces.exact),
        spike_part: masked(pieces.spike_part),
        potential_part: masked(pieces.potential_part),
        defined: pieces.defined,
        norm_factor: norm,
        cap: opts.cap,
        raw_spike_max: pieces.raw_spike_max,
    }
}

/// Ground state of `T + Ē` compared with the factorized state.
#[derive(Clone, Debug)]
pub struct SingleSurfaceCheck {
    pub e0: f64,
    pub e1: Option<f64>,
    pub chi0: ScalarField,
    /// `e0 − E`.
    pub energy_gap: f64,
    /// `|⟨χ₀, χ̄⟩|`.
    pub amplitude_overlap: f64,
}

/// Solves `(T + Ē) χ₀ = e₀ χ₀` on the grid the state was factorized on.
pub fn verify_single_surface(
    fs: &FactorizedState,
    grid: &ProductGrid,
    opts: &SolverOptions,
) -> Result<SingleSurfaceCheck> {
    let r = single_surface_spectrum(fs, grid, 2, opts)?;
    let chi0 = surface_states(&r, grid).swap_remove(0);
    let amplitude_overlap = grid.inner_product(&chi0, &fs.amplitude)?.abs();
    Ok(SingleSurfaceCheck {
        e0: r.values[0],
        e1: r.values.get(1).copied(),
        energy_gap: r.values[0] - fs.energy,
        chi0,
        amplitude_overlap,
    })
}

/// Lowest `k` eigenpairs of `T + Ē` for a factorized state.
pub fn single_surface_spectrum(
    fs: &FactorizedState,
    grid: &ProductGrid,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    let h = SurfaceHamiltonian::new(grid, fs.exact_potential.values.clone())?;
    solve(&h, k, opts)
}

/// `⟨χ̄, (T + Ē) χ̄⟩`.
pub fn rayleigh_quotient(fs: &FactorizedState, grid: &ProductGrid) -> Result<f64> {
    let amp = &fs.amplitude.values;
    check_len(grid, amp.len())?;
    let mut t = Array1::zeros(amp.len());
    grid.apply_kinetic(amp.view(), t.view_mut());
    let h = t + &(&fs.exact_potential.values * amp);
    Ok(grid.cell_volume() * amp.dot(&h))
}

/// A field restricted to the grid line nearest `fixed_value` on `axis`,
/// returned with the coordinates along the other axis.
pub fn cross_section(
    field: &ScalarField,
    grid: &ProductGrid,
    axis: usize,
    fixed_value: f64,
) -> Result<(Vec<f64>, ScalarField)> {
    check_len(grid, field.len())?;
    let idx = grid.cross_section_indices(axis, fixed_value)?;
    let other = 1 - axis;
    let coords = grid.axis(other)?.points().to_vec();
    Ok((coords, field.select(&idx)))
}

/// Mean deviation of `Ē` from each diabatic surface over the smooth, populated
/// part of the grid; the smaller of the two is returned with its index (0 or 1).
pub fn diabatic_tracking(
    fs: &FactorizedState,
    params: &ModelParams,
    grid: &ProductGrid,
    spike_threshold: f64,
    amplitude_fraction: f64,
) -> Option<(usize, f64)> {
    let v = diabatic_fields(params, grid);
    let amp_max = fs.amplitude.values.iter().cloned().fold(0.0, f64::max);
    let mut sums = [0.0; 2];
    let mut count = 0usize;
    for i in 0..fs.amplitude.len() {
        if !fs.defined[i]
            || fs.spike_part.values[i] >= spike_threshold
            || fs.amplitude.values[i] < amplitude_fraction * amp_max
        {
            continue;
        }
        let e = fs.exact_potential.values[i];
        sums[0] += (e - v.v11[i]).abs();
        sums[1] += (e - v.v22[i]).abs();
        count += 1;
    }
    if count == 0 {
        return None;
    }
    let means = [sums[0] / count as f64, sums[1] / count as f64];
    Some(if means[0] <= means[1] { (0, means[0]) } else { (1, means[1]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::solve_dense;
    use crate::grid::GridSpec;
    use crate::hamiltonian::{vibronic_states, VibronicHamiltonian};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid_1d(n: usize, half: f64, omega: f64) -> ProductGrid {
        ProductGrid::from_specs(&[GridSpec::new(-half, half, n, omega)]).unwrap()
    }

    fn states_1d(params: &ModelParams, grid: &ProductGrid, k: usize) -> Vec<VibronicState> {
        let h = VibronicHamiltonian::new(params, grid);
        let r = solve(&h, k, &SolverOptions::default()).unwrap();
        vibronic_states(&r, grid)
    }

    #[test]
    fn uncoupled_ground_state_has_no_spike() {
        let p = ModelParams::butatriene_1d().with_lambda(0.0);
        let g = grid_1d(201, 9.0, p.omega_x);
        let s = &states_1d(&p, &g, 1)[0];
        assert!(s.field.chi2.iter().all(|v| v.abs() < 1e-8));
        let fs = factorize_state(s, &p, &g, &FactorizeOptions::default()).unwrap();
        let v = diabatic_fields(&p, &g);
        for i in 0..g.total_size() {
            if fs.defined[i] {
                assert!(fs.theta.values[i].abs() < 1e-6);
                assert!(fs.spike_part.values[i] < 1e-8);
                assert_abs_diff_eq!(fs.exact_potential.values[i], v.v11[i], epsilon = 1e-6);
                assert_abs_diff_eq!(
                    fs.amplitude.values[i] * fs.norm_factor,
                    s.field.chi1[i].abs(),
                    epsilon = 1e-12
                );
            }
        }
    }

    /// Oracle: closed-form spike of χ₁ = Q g, χ₂ = c g.
    #[test]
    fn lorentzian_spike_matches_closed_form() {
        let omega = 0.7;
        let c = 0.3;
        let g = grid_1d(801, 8.0, omega);
        let gauss = |q: f64| (-0.5 * q * q).exp();
        let chi1 = g.sample(|q| q.qx * gauss(q.qx));
        let chi2 = g.sample(|q| c * gauss(q.qx));
        let d1 = g.sample(|q| (1.0 - q.qx * q.qx) * gauss(q.qx));
        let d2 = g.sample(|q| -c * q.qx * gauss(q.qx));
        let v = diabatic_fields(&ModelParams::butatriene_1d(), &g);
        let p = exact_potential_from_components(
            &chi1,
            &chi2,
            &[d1],
            &[d2],
            &[omega],
            &v,
            &FactorizeOptions {
                cap: 1e9,
                floor: 1e-12,
            },
        );
        for (i, q) in g.points().enumerate() {
            if p.defined[i] {
                let want = 0.5 * omega * c * c / (q.qx * q.qx + c * c).powi(2);
                assert_abs_diff_eq!(p.spike_part[i], want, epsilon = 1e-6);
            }
        }
        // and through the spectral-derivative path on the grid
        let st = VibronicState {
            energy: 0.0,
            field: TwoComponentField::new(chi1, chi2),
        };
        let fs = factorize_state(
            &st,
            &ModelParams {
                omega_x: omega,
                ..ModelParams::butatriene_1d()
            },
            &g,
            &FactorizeOptions {
                cap: 1e9,
                floor: 1e-12,
            },
        )
        .unwrap();
        let peak = fs.spike_part.values.iter().cloned().fold(0.0, f64::max);
        let spacing = g.axes()[0].spacing();
        // the grid point nearest the node is at most half a spacing away
        let lo = 0.5 * omega * c * c / ((0.5 * spacing).powi(2) + c * c).powi(2);
        assert!(peak <= 0.5 * omega / (c * c) + 1e-6 && peak >= lo - 1e-6);
    }

    #[test]
    fn one_dimensional_ground_state_is_smooth() {
        let p = ModelParams::butatriene_1d();
        let g = grid_1d(401, 9.0, p.omega_x);
        let s = &states_1d(&p, &g, 1)[0];
        let fs = factorize_state(s, &p, &g, &FactorizeOptions::default()).unwrap();
        let amp_max = fs.amplitude.values.iter().cloned().fold(0.0, f64::max);
        let populated_spike = (0..g.total_size())
            .filter(|&i| fs.amplitude.values[i] > 1e-3 * amp_max)
            .map(|i| fs.spike_part.values[i])
            .fold(0.0, f64::max);
        assert!(populated_spike < 0.05, "spike {populated_spike}");
        let (surface, err) = diabatic_tracking(&fs, &p, &g, 0.01, 1e-2).unwrap();
        assert_eq!(surface, 0);
        assert!(err < 0.05);
    }

    #[test]
    fn excited_states_have_spikes() {
        let p = ModelParams::butatriene_1d();
        let g = grid_1d(401, 9.0, p.omega_x);
        let states = states_1d(&p, &g, 4);
        for s in &states[1..] {
            let fs = factorize_state(s, &p, &g, &FactorizeOptions { cap: 1e6, ..Default::default() }).unwrap();
            assert!(fs.raw_spike_max > 1.0, "max spike {}", fs.raw_spike_max);
        }
    }

    #[test]
    fn ground_state_reproduced_by_single_surface_problem() {
        let p = ModelParams::butatriene_1d();
        let g = grid_1d(401, 9.0, p.omega_x);
        let s = &states_1d(&p, &g, 1)[0];
        let fs = factorize_state(s, &p, &g, &FactorizeOptions { cap: 1e6, ..Default::default() }).unwrap();
        let v = verify_single_surface(&fs, &g, &SolverOptions::default()).unwrap();
        assert!(v.energy_gap.abs() < 1e-6, "gap {}", v.energy_gap);
        assert!(v.amplitude_overlap > 1.0 - 1e-8);
        assert_abs_diff_eq!(v.e0, 9.4878, epsilon = 1e-4);
        let rq = rayleigh_quotient(&fs, &g).unwrap();
        assert!((rq - s.energy).abs() < 1e-6);
    }

    #[test]
    fn decoupled_single_surface_spectrum_is_the_v11_ladder() {
        let p = ModelParams::butatriene_1d().with_lambda(0.0);
        let g = grid_1d(301, 9.0, p.omega_x);
        let s = &states_1d(&p, &g, 1)[0];
        let fs = factorize_state(s, &p, &g, &FactorizeOptions::default()).unwrap();
        let r = single_surface_spectrum(&fs, &g, 5, &SolverOptions::default()).unwrap();
        let shift = p.e1 - p.kappa1 * p.kappa1 / (2.0 * p.omega_x);
        for vq in 0..5 {
            assert_abs_diff_eq!(r.values[vq], shift + p.omega_x * (vq as f64 + 0.5), epsilon = 1e-6);
        }
    }

    #[test]
    fn interpolated_factorization_matches_direct_on_same_grid() {
        let p = ModelParams::butatriene_1d();
        let g = grid_1d(201, 9.0, p.omega_x);
        let s = &states_1d(&p, &g, 3)[2];
        let opts = FactorizeOptions { cap: 1e6, ..Default::default() };
        let a = factorize_state(s, &p, &g, &opts).unwrap();
        let b = factorize_on(s, &p, &g, &g, &opts).unwrap();
        for i in 0..g.total_size() {
            if a.defined[i] {
                let scale = 1.0 + a.exact_potential.values[i].abs();
                assert!((a.exact_potential.values[i] - b.exact_potential.values[i]).abs() < 1e-7 * scale);
            }
        }
    }

    #[test]
    fn cross_section_of_constant_field() {
        let g = ProductGrid::from_specs(&[
            GridSpec::new(-3.0, 3.0, 11, 1.0),
            GridSpec::new(-2.0, 2.0, 9, 1.0),
        ])
        .unwrap();
        let f = ScalarField::new(Array1::from_elem(99, 2.5));
        let (coords, line) = cross_section(&f, &g, 0, 0.0).unwrap();
        assert_eq!(coords.len(), 9);
        assert!(line.values.iter().all(|v| *v == 2.5));
        assert!(matches!(cross_section(&f, &g, 1, 7.0), Err(Error::OutOfExtent { .. })));
    }

    #[test]
    fn masked_points_take_the_cap() {
        let g = grid_1d(41, 4.0, 1.0);
        let chi1 = g.sample(|q| if q.qx > 2.0 { 0.0 } else { (-q.qx * q.qx).exp() });
        let chi2 = Array1::zeros(41);
        let v = diabatic_fields(&ModelParams::butatriene_1d(), &g);
        let zeros = vec![Array1::zeros(41)];
        let p = exact_potential_from_components(&chi1, &chi2, &zeros, &zeros, &[1.0], &v, &FactorizeOptions::default());
        for (i, q) in g.points().enumerate() {
            if q.qx > 2.0 {
                assert!(!p.defined[i]);
                assert_eq!(p.exact[i], DEFAULT_CAP);
                assert_eq!(p.spike_part[i], 0.0);
            }
        }
    }

    fn random_state(seed: u64, n: usize) -> TwoComponentField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        TwoComponentField::new(
            Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0)),
            Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0)),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn factorization_invariants(seed in 0u64..10_000, cap in 1.0..1e4f64) {
            let p = ModelParams::butatriene_1d();
            let g = grid_1d(64, 5.0, p.omega_x);
            let mut field = random_state(seed, 64);
            let norm = g.inner_product_two(&field, &field).unwrap().sqrt();
            field.chi1 /= norm;
            field.chi2 /= norm;
            let st = VibronicState { energy: 9.5, field: field.clone() };
            let fs = factorize_state(&st, &p, &g, &FactorizeOptions { cap, ..Default::default() }).unwrap();
            prop_assert!(fs.amplitude.values.iter().all(|a| *a >= 0.0));
            prop_assert!((g.norm(&fs.amplitude).unwrap() - 1.0).abs() < 1e-12);
            for i in 0..64 {
                prop_assert!(fs.spike_part.values[i] >= 0.0);
                let sum = fs.spike_part.values[i] + fs.potential_part.values[i];
                prop_assert!((fs.exact_potential.values[i] - sum).abs() <= 1e-12 * sum.abs().max(1.0));
                if fs.defined[i] {
                    let (c1, c2) = (fs.c1.values[i], fs.c2.values[i]);
                    prop_assert!((c1 * c1 + c2 * c2 - 1.0).abs() < 1e-12);
                    let scale = fs.amplitude.values[i] * fs.norm_factor;
                    prop_assert!((c1 * scale - field.chi1[i]).abs() < 1e-10);
                    prop_assert!((c2 * scale - field.chi2[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn dense_verification_equivalent_to_dispatch() {
        let p = ModelParams::butatriene_1d();
        let g = grid_1d(101, 9.0, p.omega_x);
        let s = &states_1d(&p, &g, 1)[0];
        let fs = factorize_state(s, &p, &g, &FactorizeOptions { cap: 1e6, ..Default::default() }).unwrap();
        let h = SurfaceHamiltonian::new(&g, fs.exact_potential.values.clone()).unwrap();
        let d = solve_dense(&crate::eigen::assemble(&h)).unwrap();
        let r = single_surface_spectrum(&fs, &g, 3, &SolverOptions::default()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(d.values[i], r.values[i], epsilon = 1e-10);
        }
    }
}
