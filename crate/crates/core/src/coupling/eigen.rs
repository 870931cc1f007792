use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::poly::{companion_roots, Poly};
use super::HybridSystem;
use crate::magnon::{magnon_complex_frequency, FieldPoint};
use crate::photon::photon_complex_frequency;
use crate::units::{principal_sqrt, GHZ_TO_RAD_PER_S};
use crate::{Error, Result};

/// Hybridised branches of one magnon–photon pair,
/// E± = (ω̃_r + ω̃_n)/2 ± ½·sqrt((ω̃_r − ω̃_n)² + 2ω_mω_nK²).
///
/// The principal root makes E+ the branch with the larger real part; when
/// the real parts coincide it is the one with the smaller linewidth.
pub fn pairwise_branches(
    omega_r: Complex64,
    omega_n: Complex64,
    omega_m: f64,
    omega_n_bare: f64,
    k_sq: Complex64,
) -> (Complex64, Complex64) {
    let mean = (omega_r + omega_n) * 0.5;
    let diff = omega_r - omega_n;
    let root = principal_sqrt(diff * diff + k_sq * (2.0 * omega_m * omega_n_bare));
    (mean + root * 0.5, mean - root * 0.5)
}

/// Coupling matrix acting on (m⁺, J₁⁺, ..., J_N⁺).
///
/// Row 0 carries ω_m K_n²/2 so that the determinant matches the
/// ½ω_mω_nK_n² normalisation of the pairwise closed form.
pub fn build_coupling_matrix(
    sys: &HybridSystem,
    omega: Complex64,
    h: FieldPoint,
) -> DMatrix<Complex64> {
    let n = sys.len();
    let wm = sys.magnon().omega_m();
    let mut m = DMatrix::<Complex64>::zeros(n + 1, n + 1);
    m[(0, 0)] = omega - magnon_complex_frequency(h, sys.magnon());
    for (j, (mode, c)) in sys.modes().iter().zip(sys.couplings()).enumerate() {
        m[(0, j + 1)] = c.k_squared() * (0.5 * wm);
        m[(j + 1, 0)] = Complex64::new(mode.omega(), 0.0);
        m[(j + 1, j + 1)] = omega - photon_complex_frequency(mode);
    }
    m
}

/// det = (ω − ω̃_r)·Π(ω − ω̃_n) − Σ_n ½ω_mω_nK_n²·Π_{j≠n}(ω − ω̃_j).
pub fn coupling_determinant(sys: &HybridSystem, omega: Complex64, h: FieldPoint) -> Complex64 {
    let wm = sys.magnon().omega_m();
    let magnon = omega - magnon_complex_frequency(h, sys.magnon());
    let diag: Vec<Complex64> = sys
        .modes()
        .iter()
        .map(|m| omega - photon_complex_frequency(m))
        .collect();
    let mut det = magnon * diag.iter().product::<Complex64>();
    for (n, (mode, c)) in sys.modes().iter().zip(sys.couplings()).enumerate() {
        let others: Complex64 = diag
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != n)
            .map(|(_, &d)| d)
            .product();
        det -= c.k_squared() * (0.5 * wm * mode.omega()) * others;
    }
    det
}

/// Determinant in units of `scale`, kept in product form so that it can be
/// evaluated accurately next to nearly degenerate roots.
struct ScaledDeterminant {
    scale: f64,
    magnon: Complex64,
    photons: Vec<Complex64>,
    /// ½ω_mω_nK_n² / scale².
    couplings: Vec<Complex64>,
}

impl ScaledDeterminant {
    fn new(sys: &HybridSystem, h: FieldPoint) -> Self {
        let wr = magnon_complex_frequency(h, sys.magnon());
        let wn: Vec<Complex64> = sys.modes().iter().map(photon_complex_frequency).collect();
        let scale = wn
            .iter()
            .chain(std::iter::once(&wr))
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let wm = sys.magnon().omega_m() / scale;
        ScaledDeterminant {
            scale,
            magnon: wr / scale,
            photons: wn.iter().map(|z| z / scale).collect(),
            couplings: sys
                .modes()
                .iter()
                .zip(sys.couplings())
                .map(|(m, c)| c.k_squared() * (0.5 * wm * m.omega() / scale))
                .collect(),
        }
    }

    fn others(&self, n: usize) -> impl Iterator<Item = Complex64> + '_ {
        self.photons
            .iter()
            .enumerate()
            .filter(move |&(j, _)| j != n)
            .map(|(_, &z)| z)
    }

    fn eval(&self, y: Complex64) -> Complex64 {
        let diag: Vec<Complex64> = self.photons.iter().map(|&z| y - z).collect();
        let mut det = (y - self.magnon) * diag.iter().product::<Complex64>();
        for (n, &c) in self.couplings.iter().enumerate() {
            let others: Complex64 = diag
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != n)
                .map(|(_, &d)| d)
                .product();
            det -= c * others;
        }
        det
    }

    fn polynomial(&self) -> Poly {
        let mut p = Poly::from_roots(&self.photons).mul_linear(self.magnon);
        for (n, &c) in self.couplings.iter().enumerate() {
            let others: Vec<Complex64> = self.others(n).collect();
            p = p.add(&Poly::from_roots(&others).scale(-c));
        }
        p
    }

    /// Newton steps with the product-form value and the expanded derivative.
    fn polish(&self, p: &Poly, mut y: Complex64) -> Complex64 {
        let mut best = self.eval(y).norm();
        for _ in 0..6 {
            let (_, dp) = p.eval_with_derivative(y);
            if best == 0.0 || dp.norm() == 0.0 {
                break;
            }
            let cand = y - self.eval(y) / dp;
            let r = self.eval(cand).norm();
            if !(r < best) {
                break;
            }
            best = r;
            y = cand;
        }
        y
    }
}

#[cfg(test)]
fn characteristic_polynomial(sys: &HybridSystem, h: FieldPoint) -> (Poly, f64) {
    let d = ScaledDeterminant::new(sys, h);
    (d.polynomial(), d.scale)
}

/// All N+1 roots of det(M(ω)) = 0 in rad/s, ordered by real part.
///
/// Each root is checked against the coupling matrix:
/// |det M(root)| / ‖M(root)‖_F^(N+1) < 1e-9.
pub fn multimode_eigenvalues(sys: &HybridSystem, h: FieldPoint) -> Result<Vec<Complex64>> {
    let det = ScaledDeterminant::new(sys, h);
    let p = det.polynomial();
    let mut roots: Vec<Complex64> = companion_roots(&p)?
        .into_iter()
        .map(|y| det.polish(&p, y) * det.scale)
        .collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let order = (sys.len() + 1) as i32;
    let residuals: Vec<f64> = roots
        .iter()
        .map(|&z| {
            let m = build_coupling_matrix(sys, z, h);
            m.clone().lu().determinant().norm() / m.norm().powi(order)
        })
        .collect();
    if residuals.iter().any(|r| !(*r < 1e-9)) {
        return Err(Error::Numerical(format!(
            "eigenvalue residuals at μ0H = {} T exceed 1e-9: {residuals:?}",
            h.tesla()
        )));
    }
    Ok(roots)
}

/// Complex eigenvalues E = ω − iΔω along a field sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBranches {
    pub fields: Vec<FieldPoint>,
    /// `eigenvalues[i][b]`: branch `b` at field `i`, rad/s.
    pub eigenvalues: Vec<Vec<Complex64>>,
}

impl EigenBranches {
    pub fn branch_count(&self) -> usize {
        self.eigenvalues.first().map_or(0, Vec::len)
    }

    /// Branch frequency ω/2π in GHz.
    pub fn frequency_ghz(&self, i: usize, b: usize) -> f64 {
        self.eigenvalues[i][b].re / GHZ_TO_RAD_PER_S
    }

    /// Half linewidth Δω/2π in GHz.
    pub fn half_linewidth_ghz(&self, i: usize, b: usize) -> f64 {
        -self.eigenvalues[i][b].im / GHZ_TO_RAD_PER_S
    }

    pub fn branch(&self, b: usize) -> impl Iterator<Item = Complex64> + '_ {
        self.eigenvalues.iter().map(move |row| row[b])
    }
}

/// Pairwise E± of centre `n` along `fields`; column 0 is E+, column 1 E−.
pub fn sweep_pairwise(sys: &HybridSystem, n: usize, fields: &[FieldPoint]) -> EigenBranches {
    let magnon = sys.center_magnon(n);
    let mode = &sys.modes()[n];
    let wn = photon_complex_frequency(mode);
    let k_sq = sys.couplings()[n].k_squared();
    let eigenvalues = fields
        .iter()
        .map(|&h| {
            let (p, m) = pairwise_branches(
                magnon_complex_frequency(h, &magnon),
                wn,
                magnon.omega_m(),
                mode.omega(),
                k_sq,
            );
            vec![p, m]
        })
        .collect();
    EigenBranches {
        fields: fields.to_vec(),
        eigenvalues,
    }
}

/// Multimode roots along `fields`, reordered into continuous trajectories.
pub fn sweep_multimode(sys: &HybridSystem, fields: &[FieldPoint]) -> Result<EigenBranches> {
    let eigenvalues = fields
        .par_iter()
        .map(|&h| multimode_eigenvalues(sys, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(track_branches(EigenBranches {
        fields: fields.to_vec(),
        eigenvalues,
    }))
}

/// Reorders the roots at each field so that every column follows one
/// continuous trajectory. Matching minimises the summed squared distance to
/// a linear extrapolation of the two previous points.
pub fn track_branches(mut eb: EigenBranches) -> EigenBranches {
    let n = eb.branch_count();
    let perms = if n <= 6 { permutations(n) } else { Vec::new() };
    for i in 1..eb.eigenvalues.len() {
        let predicted: Vec<Complex64> = if i >= 2 {
            (0..n)
                .map(|b| eb.eigenvalues[i - 1][b] * 2.0 - eb.eigenvalues[i - 2][b])
                .collect()
        } else {
            eb.eigenvalues[i - 1].clone()
        };
        let current = eb.eigenvalues[i].clone();
        let cost = |p: &[usize]| -> f64 {
            p.iter()
                .enumerate()
                .map(|(b, &j)| (current[j] - predicted[b]).norm_sqr())
                .sum()
        };
        let best: Vec<usize> = if perms.is_empty() {
            greedy_match(&predicted, &current)
        } else {
            perms
                .iter()
                .min_by(|a, b| cost(a).total_cmp(&cost(b)))
                .cloned()
                .unwrap_or_default()
        };
        eb.eigenvalues[i] = best.iter().map(|&j| current[j]).collect();
    }
    eb
}

fn greedy_match(predicted: &[Complex64], current: &[Complex64]) -> Vec<usize> {
    let mut free: Vec<usize> = (0..current.len()).collect();
    predicted
        .iter()
        .map(|p| {
            let (k, _) = free
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    (current[*a.1] - p)
                        .norm()
                        .total_cmp(&(current[*b.1] - p).norm())
                })
                .expect("as many roots as branches");
            free.remove(k)
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                rec(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::super::poly::durand_kerner;
    use super::super::{CouplingDecomposition, ModeCoupling};
    use super::*;
    use crate::magnon::{kittel_field, MagnonParams};
    use crate::photon::PhotonMode;
    use crate::units::ghz_to_angular;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn field(b: f64) -> FieldPoint {
        FieldPoint::new(b).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn pairwise_decoupled_limit() {
        let wr = c(3.0e10, -1e7);
        let wn = c(3.2e10, -6e7);
        let (p, m) = pairwise_branches(wr, wn, 3e10, 3.2e10, c(0.0, 0.0));
        assert!(rel(p, wn) < 1e-15 && rel(m, wr) < 1e-15);
    }

    #[test]
    fn coherent_gap_at_crossing() {
        // zero damping, ω_r = ω_n = 2π·7.02 GHz, ω_m = γμ0Ms
        let wm = MagnonParams::default().omega_m();
        let w = ghz_to_angular(7.02);
        let (p, m) = pairwise_branches(c(w, 0.0), c(w, 0.0), wm, w, c(1e-4, 0.0));
        let gap_ghz = (p - m).re / GHZ_TO_RAD_PER_S;
        // sqrt(2·4.816·7.02)·0.01 GHz
        let oracle = (2.0f64 * 4.816 * 7.02).sqrt() * 0.01;
        assert!((gap_ghz - oracle).abs() < 1e-12);
        assert!((gap_ghz - 0.0822).abs() / 0.0822 < 0.01);
        assert_eq!(p.im, 0.0);
        assert_eq!(m.im, 0.0);
    }

    #[test]
    fn dissipative_coupling_attracts() {
        let wm = MagnonParams::default().omega_m();
        let w = ghz_to_angular(7.02);
        let (p, m) = pairwise_branches(c(w, 0.0), c(w, 0.0), wm, w, c(-6.4e-5, 0.0));
        assert_eq!(p.re, m.re);
        assert!(p.im > m.im);
        // labelling under attraction: E+ is the longer-lived branch
        assert!(p.im.abs() <= m.im.abs() || p.im > 0.0);
    }

    fn one_mode(k: Complex64, alpha_cp: f64, f: f64, beta: f64) -> HybridSystem {
        let mode = PhotonMode::new(1, f, beta).unwrap();
        let coupling = ModeCoupling::new(CouplingDecomposition::new(k, 0.0), 0.0, &mode);
        HybridSystem::new(
            MagnonParams::default().with_alpha_cp(alpha_cp),
            vec![mode],
            vec![coupling],
        )
        .unwrap()
    }

    #[test]
    fn matrix_determinant_agrees_with_closed_form() {
        let sys = HybridSystem::measured_device();
        for (b, f) in [(0.08, 4.5), (0.13, 5.5), (0.19, 7.0)] {
            let w = c(ghz_to_angular(f), -1e6);
            let m = build_coupling_matrix(&sys, w, field(b));
            let lu = m.lu().determinant();
            let closed = coupling_determinant(&sys, w, field(b));
            assert!(rel(lu, closed) < 1e-12, "{lu} vs {closed}");
        }
    }

    #[test]
    fn single_mode_determinant_matches_two_by_two_form() {
        // (ω − ω̃_r)(ω − ω̃_p) − ½ω_mω_pK²
        let sys = one_mode(c(0.01, 0.0), 0.0, 7.02, 2.1e-3);
        let h = field(0.18);
        let w = c(ghz_to_angular(7.1), 0.0);
        let wr = magnon_complex_frequency(h, sys.magnon());
        let wp = photon_complex_frequency(&sys.modes()[0]);
        let expect = (w - wr) * (w - wp)
            - c(1e-4, 0.0) * (0.5 * sys.magnon().omega_m() * sys.modes()[0].omega());
        let lu = build_coupling_matrix(&sys, w, h).lu().determinant();
        assert!(rel(lu, expect) < 1e-12);
    }

    #[test]
    fn decoupled_matrix_structure() {
        let sys = HybridSystem::measured_device().decoupled();
        let h = field(0.12);
        let wr = magnon_complex_frequency(h, sys.magnon());
        let m = build_coupling_matrix(&sys, wr, h);
        assert_eq!(m.lu().determinant(), c(0.0, 0.0));
        let w = c(ghz_to_angular(6.0), 0.0);
        let expect = (w - wr)
            * sys
                .modes()
                .iter()
                .map(|m| w - photon_complex_frequency(m))
                .product::<Complex64>();
        assert!(rel(build_coupling_matrix(&sys, w, h).lu().determinant(), expect) < 1e-12);
    }

    #[test]
    fn decoupled_roots_are_bare_frequencies() {
        let sys = HybridSystem::measured_device().decoupled();
        for b in [
            0.02,
            0.08,
            kittel_field(5.56, sys.magnon()).unwrap().tesla(),
            0.3,
        ] {
            let h = field(b);
            let roots = multimode_eigenvalues(&sys, h).unwrap();
            let mut bare: Vec<Complex64> =
                sys.modes().iter().map(photon_complex_frequency).collect();
            bare.push(magnon_complex_frequency(h, sys.magnon()));
            for z in bare {
                let best = roots
                    .iter()
                    .map(|r| rel(*r, z))
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-12, "{z} missing at {b} T ({best:e})");
            }
        }
    }

    #[test]
    fn single_mode_roots_match_pairwise() {
        for (k, a) in [
            (c(0.0, 0.008), 0.0),
            (c(0.0, 0.004), 0.01),
            (c(0.01, 0.0), 2e-4),
        ] {
            let sys = one_mode(k, a, 5.56, 1.8e-3);
            let hc = kittel_field(5.56, sys.magnon()).unwrap().tesla();
            for d in [-0.01, -1e-3, 0.0, 2e-4, 0.01] {
                let h = field(hc + d);
                let roots = multimode_eigenvalues(&sys, h).unwrap();
                let (p, m) = pairwise_branches(
                    magnon_complex_frequency(h, sys.magnon()),
                    photon_complex_frequency(&sys.modes()[0]),
                    sys.magnon().omega_m(),
                    sys.modes()[0].omega(),
                    k * k,
                );
                for z in [p, m] {
                    let best = roots
                        .iter()
                        .map(|r| rel(*r, z))
                        .fold(f64::INFINITY, f64::min);
                    assert!(best < 1e-10, "{best:e}");
                }
            }
        }
    }

    #[test]
    fn durand_kerner_cross_checks_companion() {
        let sys = HybridSystem::measured_device();
        let h = kittel_field(5.56, sys.magnon()).unwrap();
        let (p, scale) = characteristic_polynomial(&sys, h);
        let dk = durand_kerner(&p, 1e-13, 5000).unwrap();
        let roots = multimode_eigenvalues(&sys, h).unwrap();
        for z in dk {
            let best = roots
                .iter()
                .map(|r| rel(*r, z * scale))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10);
        }
    }

    #[test]
    fn tracking_keeps_trajectories_continuous() {
        let sys = HybridSystem::measured_device();
        let hc = kittel_field(7.02, sys.magnon()).unwrap().tesla();
        let fields: Vec<FieldPoint> = (0..201)
            .map(|i| field(hc - 0.02 + 2e-4 * i as f64))
            .collect();
        let eb = sweep_multimode(&sys, &fields).unwrap();
        for i in 1..fields.len() {
            for b in 0..eb.branch_count() {
                let step = (eb.eigenvalues[i][b] - eb.eigenvalues[i - 1][b]).norm();
                let width = eb.eigenvalues[i][b]
                    .im
                    .abs()
                    .max(eb.eigenvalues[i - 1][b].im.abs());
                assert!(
                    step <= 10.0 * width,
                    "branch {b} jumps at {i}: {step:e} vs {width:e}"
                );
            }
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    proptest! {
        #[test]
        fn real_and_imaginary_coupling_at_resonance(k in 1e-3f64..0.05, f in 3.0f64..9.0) {
            let wm = MagnonParams::default().omega_m();
            let w = ghz_to_angular(f);
            let (p, m) = pairwise_branches(c(w, 0.0), c(w, 0.0), wm, w, c(k * k, 0.0));
            let split = (2.0 * wm * w).sqrt() * k;
            prop_assert!(((p.re - m.re) - split).abs() <= 1e-9 * split);
            prop_assert!(p.im == 0.0 && m.im == 0.0);
            let (p, m) = pairwise_branches(c(w, 0.0), c(w, 0.0), wm, w, c(-k * k, 0.0));
            prop_assert_eq!(p.re, m.re);
            prop_assert!(((p.im - m.im) - split).abs() <= 1e-9 * split);
        }

        #[test]
        fn root_residuals_small(b in 0.01f64..0.3, k in 0.0f64..0.03, kind in 0u8..2) {
            let mut sys = HybridSystem::measured_device();
            let k = if kind == 0 { c(k, 0.0) } else { c(0.0, k) };
            let couplings: Vec<ModeCoupling> = sys
                .couplings()
                .iter()
                .map(|cp| ModeCoupling { decomposition: CouplingDecomposition::new(k, 0.0), ..*cp })
                .collect();
            sys = HybridSystem::new(*sys.magnon(), sys.modes().to_vec(), couplings).unwrap();
            prop_assert_eq!(multimode_eigenvalues(&sys, field(b)).unwrap().len(), 4);
        }
    }
}
