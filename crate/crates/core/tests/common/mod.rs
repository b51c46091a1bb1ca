#![allow(dead_code)]

use genent_core::constructions::mc_state;
use genent_core::criteria::ppt_check;
use genent_core::eb::{normal_form_state, EbBasis};
use genent_core::hilbert::{permute_systems, tensor_product};
use genent_core::lemma5::{consistent_fixture, Lemma5Params};
use genent_core::linalg::{
    self, c, random_complex_matrix, random_complex_vector, random_density, random_unitary, CMatrix, CVector, C64,
};
use genent_core::measures::binary_entropy;
use genent_core::{HilbertStructure, StateMatrix, Tolerances};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn single(label: &str, m: CMatrix) -> StateMatrix {
    StateMatrix::new(HilbertStructure::new(vec![m.nrows()], vec![label]).unwrap(), m).unwrap()
}

pub fn bell_mc() -> StateMatrix {
    mc_state(&CMatrix::from_element(2, 2, c(0.5, 0.0))).unwrap()
}

pub fn rank2_mc() -> StateMatrix {
    let q = std::f64::consts::FRAC_PI_4;
    let s = HilbertStructure::new(vec![2, 2], vec!["A", "C"]).unwrap();
    StateMatrix::new(s, normal_form_state(q, q, 2, 2)).unwrap()
}

/// Random NPT state supported on `span{a_i ⊗ |i⟩}` for random `a_i ∈ C^da`.
pub fn random_eb_state(rng: &mut ChaCha8Rng, n: usize, da: usize) -> (StateMatrix, EbBasis) {
    let structure = HilbertStructure::new(vec![da, n], vec!["A", "C1"]).unwrap();
    loop {
        let basis = EbBasis::new((0..n).map(|_| random_complex_vector(rng, da)).collect(), n).unwrap();
        let span: Vec<CVector> = (0..n).map(|i| basis.span_vector(i)).collect();
        let rank = rng.random_range(2..=3.min(n));
        let mut m = CMatrix::zeros(da * n, da * n);
        for _ in 0..rank {
            let coeffs = random_complex_vector(rng, n);
            let psi = span.iter().zip(coeffs.iter()).fold(CVector::zeros(da * n), |acc, (s, &z)| acc + s * z);
            m += linalg::outer(&psi);
        }
        let t = m.trace();
        let rho = StateMatrix::new(structure.clone(), m.unscale(t.re)).unwrap();
        if !ppt_check(&rho, &["A"], &Tolerances::default()).unwrap().0 {
            return (rho, basis);
        }
    }
}

/// Invertible matrix whose columns have unit norm.
pub fn unit_column_frame(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let mut m = random_complex_matrix(rng, d, d);
    for j in 0..d {
        let n = m.column(j).norm();
        m.column_mut(j).unscale_mut(n);
    }
    m
}

pub fn lemma5_fixture(rng: &mut ChaCha8Rng) -> (Lemma5Params, StateMatrix) {
    let theta: f64 = rng.random_range(0.3..1.2);
    let mu: f64 = rng.random_range(0.3..1.2);
    let f = rng.random_range(0.1..0.5);
    let nu = rng.random_range(0.2..1.3);
    let (ct, st) = (theta.cos().powi(2), theta.sin().powi(2));
    let lo = (ct * mu.cos() * mu.sin() / (ct * mu.cos().powi(2) + st)).atan();
    let d = rng.random_range(1..=3);
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..2.0)).collect();
    let total: f64 = raw.iter().sum();
    let terms: Vec<_> = raw
        .iter()
        .map(|r| {
            let xi = lo + (mu - lo) * rng.random_range(0.1..0.9);
            (r / total, xi, random_complex_vector(rng, 2), random_complex_vector(rng, 3))
        })
        .collect();
    consistent_fixture(theta, mu, f, nu, &terms).unwrap()
}

/// Random density matrix of random rank at most `max_rank`.
pub fn density(rng: &mut ChaCha8Rng, d: usize, max_rank: usize) -> CMatrix {
    let rank = rng.random_range(1..=max_rank);
    random_density(rng, d, rank)
}

fn abc() -> HilbertStructure {
    HilbertStructure::new(vec![2, 2, 2], vec!["A", "B", "C"]).unwrap()
}

/// `cos a |000⟩ + sin a |111⟩` under random local unitaries, mixed with a
/// little white noise.
pub fn noisy_ghz(rng: &mut ChaCha8Rng) -> StateMatrix {
    let a: f64 = rng.random_range(0.5..std::f64::consts::FRAC_PI_4);
    let noise: f64 = rng.random_range(0.0..0.05);
    let mut v = CVector::zeros(8);
    v[0] = C64::from(a.cos());
    v[7] = C64::from(a.sin());
    let u = (0..3).map(|_| random_unitary(rng, 2)).reduce(|x, y| linalg::kron(&x, &y)).unwrap();
    let psi = u * v;
    let m = linalg::outer(&psi).scale(1.0 - noise) + CMatrix::identity(8, 8).scale(noise / 8.0);
    StateMatrix::new(abc(), m).unwrap()
}

/// Random mixture of states that are each a product across one of the
/// single-party cuts of three qubits.
pub fn biseparable_mixture(rng: &mut ChaCha8Rng) -> StateMatrix {
    let labels = ["A", "B", "C"];
    let parts = rng.random_range(2..=3);
    let start = rng.random_range(0..3);
    let raw: Vec<f64> = (0..parts).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut m = CMatrix::zeros(8, 8);
    for (k, w) in raw.iter().enumerate() {
        let lone = (start + k) % 3;
        let rest: Vec<&str> = labels.iter().enumerate().filter(|&(i, _)| i != lone).map(|(_, l)| *l).collect();
        let sigma = single(labels[lone], density(rng, 2, 2));
        let tau =
            StateMatrix::new(HilbertStructure::new(vec![2, 2], rest.clone()).unwrap(), density(rng, 4, 2)).unwrap();
        let joint = tensor_product(&sigma, &tau).unwrap();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by_key(|&i| joint.labels()[i].clone());
        m += permute_systems(&joint, &order).unwrap().matrix().scale(w / total);
    }
    StateMatrix::new(abc(), m).unwrap()
}

pub fn random_product(rng: &mut ChaCha8Rng) -> StateMatrix {
    let mut out = single("A", density(rng, 2, 2));
    for l in ["B", "C"] {
        out = tensor_product(&out, &single(l, density(rng, 2, 2))).unwrap();
    }
    out
}

/// Random two-qubit state of random rank.
pub fn random_two_qubit(rng: &mut ChaCha8Rng) -> StateMatrix {
    let rank = rng.random_range(1..=4);
    let s = HilbertStructure::new(vec![2, 2], vec!["A", "B"]).unwrap();
    StateMatrix::new(s, random_density(rng, 4, rank)).unwrap()
}

fn pure_entanglement(psi: &CVector) -> f64 {
    // |ψ⟩ = Σ m_ij |ij⟩ has concurrence 2|det m| (for unit ψ)
    let n2 = psi.norm_squared();
    let det = psi[0] * psi[3] - psi[1] * psi[2];
    let conc = (2.0 * det.norm() / n2).min(1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - conc * conc).max(0.0).sqrt()))
}

/// Average entanglement of the decomposition `ψ_j = Σ_i U_ji √λ_i |e_i⟩`.
fn decomposition_cost(u: &CMatrix, weighted: &CMatrix) -> f64 {
    let states = weighted * u.transpose();
    (0..states.ncols())
        .map(|j| {
            let psi = states.column(j).into_owned();
            let w = psi.norm_squared();
            if w < 1e-300 {
                0.0
            } else {
                w * pure_entanglement(&psi)
            }
        })
        .sum()
}

/// Upper bound on the entanglement of formation of a two-qubit state by
/// randomized search over decompositions of length at most eight.
///
/// `trials` counts cost evaluations across all restarts. Each restart
/// draws a random isometry and then performs a stochastic descent by
/// left-multiplying with small random unitaries.
pub fn convex_roof_oracle(rho: &StateMatrix, trials: usize, rng: &mut ChaCha8Rng) -> f64 {
    let m = rho.matrix().unscale(rho.trace());
    let (vals, vecs) = linalg::eigh(&m);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-14).collect();
    let r = keep.len();
    let weighted = CMatrix::from_fn(4, r, |i, j| vecs[(i, keep[j])] * vals[keep[j]].sqrt());
    let restarts = 20;
    let per = trials / restarts;
    let mut best = f64::INFINITY;
    for k in 0..restarts {
        let len = (r + k % (9 - r)).min(8);
        let full = random_unitary(rng, len);
        let mut u = full.columns(0, r).into_owned();
        let mut cost = decomposition_cost(&u, &weighted);
        let mut step = 0.3;
        for _ in 1..per {
            let h = linalg::random_hermitian(rng, len).scale(step);
            let (hv, hu) = linalg::eigh(&h);
            let rot = CMatrix::from_fn(len, len, |i, j| {
                (0..len).map(|q| hu[(i, q)] * C64::from_polar(1.0, hv[q]) * hu[(j, q)].conj()).sum()
            });
            let cand = &rot * &u;
            let cc = decomposition_cost(&cand, &weighted);
            if cc < cost {
                cost = cc;
                u = cand;
                step = (step * 1.3).min(1.0);
            } else {
                step = (step * 0.93).max(1e-4);
            }
        }
        best = best.min(cost);
    }
    best
}
