//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use sepkit::decomp::{conjugated_deviation, fourier_decomposition, verify_decomposition, FourierFamily, SeparableDecomposition, Term};
use sepkit::matkit::rng::SeededRng;
use sepkit::matkit::{
    basis_vector, eig_hermitian, kron, kron_vec, projective_distance, projective_overlap, real_vec, CMatrix, C64,
};
use sepkit::sepcrit::{
    analyze, ppt_check, product_vectors_in_subspace, range_criterion, range_of, SamplingBudget, Tolerances, Verdict,
    WitnessRange,
};
use sepkit::statefab::{eps_mix, partial_transpose_first, partial_transpose_matrix, state_family, BipartiteState};

type Outcome = Result<String, String>;

fn grid() -> Vec<f64> {
    (1..20).map(|k| 0.05 * k as f64).collect()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn npt_detection() -> Outcome {
    let s = state_family("rho_insep", None).map_err(|e| e.to_string())?;
    let p = ppt_check(&s, 1e-9);
    let expected = (1.0 - 5f64.sqrt()) / 16.0;
    ensure((p.min_eig - expected).abs() < 1e-9, || format!("min eigenvalue {} != {expected}", p.min_eig))?;
    let mut v = vec![c(0.0, 0.0); 9];
    v[2] = c(1.0, 0.0);
    v[6] = c((-1.0 - 5f64.sqrt()) / 2.0, 0.0);
    let overlap = projective_overlap(&p.eigvec, &v);
    ensure(overlap > 1.0 - 1e-8, || format!("eigenvector overlap {overlap}"))?;
    let r = analyze(&s, &Tolerances::default(), &SamplingBudget::default()).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::NptInseparable, || format!("verdict {}", r.verdict))?;
    Ok(format!("min eig {:.12}, eigenvector overlap 1-{:.1e}", p.min_eig, 1.0 - overlap))
}

fn antidiagonal_u() -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| if i + j == 3 { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

fn ppt_families() -> Outcome {
    let u = kron(&CMatrix::identity(2), &antidiagonal_u());
    let mut worst = f64::INFINITY;
    let mut worst_u = 0.0f64;
    for x in grid() {
        for fam in ["rho_a", "sigma_b"] {
            let s = state_family(fam, Some(x)).map_err(|e| e.to_string())?;
            let m = ppt_check(&s, 1e-10).min_eig;
            ensure(m >= -1e-10, || format!("{fam}({x}) min eigenvalue {m}"))?;
            worst = worst.min(m);
        }
        let s = state_family("sigma_b", Some(x)).map_err(|e| e.to_string())?;
        let rotated = u.matmul(s.rho()).and_then(|m| m.matmul(&u.adjoint())).map_err(|e| e.to_string())?;
        let d = rotated.max_abs_diff(&s.partial_transpose());
        ensure(d <= 1e-12, || format!("sigma_b({x}): |T2 - U rho U+| = {d:.3e}"))?;
        worst_u = worst_u.max(d);
    }
    Ok(format!("lowest PT eigenvalue {worst:.3e}, U-identity deviation {worst_u:.1e}"))
}

fn range_detection() -> Outcome {
    let tol = Tolerances::default();
    let budget = SamplingBudget::default();
    let target = kron_vec(&basis_vector(3, 2), &basis_vector(3, 1));
    let jobs: Vec<(&str, f64)> = grid().into_iter().flat_map(|x| [("rho_a", x), ("sigma_b", x)]).collect();
    let rows: Vec<Result<(f64, f64), String>> = jobs
        .par_iter()
        .map(|&(fam, x)| {
            let s = state_family(fam, Some(x)).map_err(|e| e.to_string())?;
            let start = Instant::now();
            let r = analyze(&s, &tol, &budget).map_err(|e| e.to_string())?;
            let secs = start.elapsed().as_secs_f64();
            ensure(r.verdict == Verdict::RangeInseparable, || format!("{fam}({x}): {}", r.verdict))?;
            let counts = r.product_vector_counts.ok_or_else(|| format!("{fam}({x}): no counts"))?;
            ensure(counts.admissible_rerun.is_some(), || format!("{fam}({x}): witness not re-certified"))?;
            let w = r.witness.ok_or_else(|| format!("{fam}({x}): no witness"))?;
            let range = match r.witness_range {
                Some(WitnessRange::Rho) => range_of(s.rho(), tol.tol_rank),
                _ => range_of(&s.partial_transpose(), tol.tol_rank),
            };
            ensure(range.contains(&w, tol.tol_member), || format!("{fam}({x}): witness outside its range"))?;
            Ok((if fam == "rho_a" { projective_overlap(&w, &target) } else { 1.0 }, secs))
        })
        .collect();
    let (mut worst, mut slowest) = (1.0f64, 0.0f64);
    for (row, (fam, x)) in rows.into_iter().zip(&jobs) {
        let (o, secs) = row?;
        ensure(o > 1.0 - 1e-6, || format!("{fam}({x}): witness overlap with e3(x)e2 is {o}"))?;
        worst = worst.min(o);
        slowest = slowest.max(secs);
    }
    Ok(format!(
        "{} states RANGE_INSEPARABLE, worst rho_a witness overlap 1-{:.1e}, slowest state {slowest:.2}s",
        jobs.len(),
        1.0 - worst
    ))
}

/// Closed forms of the product vectors in `Ran T2(rho_a)`, fitted to a sample
/// through its first factor.
fn u_families(phi: &[C64], x: f64) -> [(&'static str, Option<Vec<C64>>); 5] {
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let u1 = (phi[0].norm() > 1e-3).then(|| {
        let s = phi[1] / phi[0];
        kron_vec(&[one, s, zero], &[one, s, zero])
    });
    let u5 = (phi[0].norm() > 1e-3 && phi[2].norm() > 1e-12).then(|| {
        let t = phi[2] / phi[0];
        kron_vec(&[one, zero, t], &[one / t + 1.0 / x, zero, one])
    });
    [
        ("u1", u1),
        ("u2", Some(kron_vec(&basis_vector(3, 2), &real_vec(&[1.0, 0.0, x])))),
        ("u3", Some(kron_vec(&basis_vector(3, 1), &basis_vector(3, 1)))),
        ("u4", Some(kron_vec(&basis_vector(3, 0), &basis_vector(3, 0)))),
        ("u5", u5),
    ]
}

fn solver_fidelity() -> Outcome {
    let s = state_family("rho_a", Some(0.5)).map_err(|e| e.to_string())?;
    let x = 3f64.sqrt();
    let v = range_of(&s.partial_transpose(), Tolerances::default().tol_rank);
    let set = product_vectors_in_subspace(&v, 3, 3, &SamplingBudget::default()).map_err(|e| e.to_string())?;
    ensure(!set.samples.is_empty(), || "no product vectors found".into())?;
    let mut hits = [0usize; 5];
    for p in &set.samples {
        let e = p.embed();
        let fams = u_families(&p.phi, x);
        let mut best = f64::INFINITY;
        for (k, (_, form)) in fams.iter().enumerate() {
            if let Some(f) = form {
                let d = projective_distance(&e, f);
                if d < 1e-6 {
                    hits[k] += 1;
                }
                best = best.min(d);
            }
        }
        ensure(best < 1e-6, || format!("sample outside u1..u5 (distance {best:.2e}): phi={:?} chi={:?}", p.phi, p.chi))?;
    }
    let names = ["u1", "u2", "u3", "u4", "u5"];
    for (k, &h) in hits.iter().enumerate() {
        ensure(h > 0, || format!("no representative of {} among {} samples", names[k], set.samples.len()))?;
    }
    Ok(format!("{} samples, per family {:?}", set.samples.len(), hits))
}

fn criterion_independence() -> Outcome {
    let tol = Tolerances::default();
    let budget = SamplingBudget::default();
    let w = state_family("werner2x2", Some(0.9)).map_err(|e| e.to_string())?;
    let r = analyze(&w, &tol, &budget).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::NptInseparable, || format!("werner2x2(0.9): {}", r.verdict))?;
    let range = range_criterion(&w, &tol, &budget).map_err(|e| e.to_string())?;
    ensure(!range.violated, || "werner2x2(0.9): range part alone detects it".into())?;
    let base = state_family("rho_a", Some(0.5)).map_err(|e| e.to_string())?;
    let mixed = eps_mix(&base, 0.02).map_err(|e| e.to_string())?;
    let r = analyze(&mixed, &tol, &budget).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Inconclusive, || format!("eps_mix(rho_a(0.5), 0.02): {}", r.verdict))?;
    Ok(format!("werner NPT with range inconclusive; eps_mix min eig {:.3e}, INCONCLUSIVE", r.min_eig_pt))
}

fn decompositions() -> Outcome {
    let mut worst = 0.0f64;
    for (which, n, fam) in
        [(FourierFamily::RhoSymmetric, 7, "rho_symmetric"), (FourierFamily::SigmaSymmetric, 9, "sigma_symmetric")]
    {
        let s = state_family(fam, None).map_err(|e| e.to_string())?;
        let d = fourier_decomposition(which, n).map_err(|e| e.to_string())?;
        let v = verify_decomposition(&s, &d, 1e-12).map_err(|e| e.to_string())?;
        ensure(v.verified, || format!("{fam} N={n}: deviation {:.3e}, {:?}", v.deviation, v.violations))?;
        ensure(d.len() == n && d.len() <= d.term_bound(), || format!("{fam}: {} terms", d.len()))?;
        worst = worst.max(v.deviation);
    }
    for (fam, lim) in [("rho_a", "rho_symmetric"), ("sigma_b", "sigma_symmetric")] {
        let a = state_family(fam, Some(1.0)).map_err(|e| e.to_string())?;
        let b = state_family(lim, None).map_err(|e| e.to_string())?;
        let d = a.rho().max_abs_diff(b.rho());
        ensure(d < 1e-12, || format!("{fam}(1) differs from {lim} by {d:.3e}"))?;
    }
    Ok(format!("N=7 and N=9 reproduce the symmetric states, max deviation {worst:.1e}"))
}

fn random_decomposition(rng: &mut SeededRng, da: usize, db: usize, terms: usize) -> SeparableDecomposition {
    let raw: Vec<f64> = (0..terms).map(|_| 0.05 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    let terms = raw
        .iter()
        .map(|w| {
            let (phi, chi) = rng.product_pair(da, db);
            Term { weight: w / total, phi, chi }
        })
        .collect();
    SeparableDecomposition::new(da, db, terms).expect("shapes match")
}

fn random_state(rng: &mut SeededRng, da: usize, db: usize) -> BipartiteState {
    let d = da * db;
    let g = CMatrix::from_fn(d, d, |_, _| rng.complex());
    let m = g.matmul(&g.adjoint()).expect("square");
    let tr = m.trace().re;
    BipartiteState::new(da, db, m.scale(1.0 / tr)).expect("valid state")
}

fn sorted_eigs(m: &CMatrix) -> Vec<f64> {
    let mut v = eig_hermitian(m).expect("hermitian").values;
    v.sort_by(f64::total_cmp);
    v
}

fn soundness() -> Outcome {
    let tol = Tolerances::default();
    let budget = SamplingBudget::default();
    let cases: Vec<(u64, usize, usize, usize)> = (0..200u64)
        .map(|k| {
            let (da, db) = if k % 2 == 0 { (3, 3) } else { (2, 4) };
            (k, da, db, 2 + (k as usize / 2) % 5)
        })
        .collect();
    let runs: Vec<(f64, Option<String>)> = cases
        .par_iter()
        .map(|&(k, da, db, r)| {
            let mut rng = SeededRng::derived(7, k);
            let d = random_decomposition(&mut rng, da, db, r);
            let s = BipartiteState::new(da, db, d.operator()).expect("valid state");
            let start = Instant::now();
            let outcome = analyze(&s, &tol, &budget);
            let secs = start.elapsed().as_secs_f64();
            let flag = match outcome {
                Ok(rep) if rep.verdict == Verdict::Inconclusive => None,
                Ok(rep) => Some(format!("mixture {k} ({da}x{db}, {r} terms): {}", rep.verdict)),
                Err(e) => Some(format!("mixture {k}: {e}")),
            };
            (secs, flag)
        })
        .collect();
    let slowest = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    let flagged: Vec<String> = runs.into_iter().filter_map(|r| r.1).collect();
    ensure(flagged.is_empty(), || format!("{} false positives, first: {}", flagged.len(), flagged[0]))?;

    let mut rng = SeededRng::new(11);
    let mut worst_eig = 0.0f64;
    for k in 0..1000 {
        let n = 1 + k % 9;
        let h = rng.hermitian(n);
        let d = eig_hermitian(&h).map_err(|e| e.to_string())?.reconstruct().max_abs_diff(&h);
        ensure(d <= 1e-8, || format!("eigen reconstruction {d:.3e} at n={n}"))?;
        worst_eig = worst_eig.max(d);
    }

    let mut worst_pt = 0.0f64;
    for k in 0..100 {
        let (da, db) = [(2, 2), (2, 3), (3, 3), (2, 4)][k % 4];
        let s = random_state(&mut rng, da, db);
        let pt = s.partial_transpose();
        let back = partial_transpose_matrix(&pt, da, db).max_abs_diff(s.rho());
        ensure(back <= 1e-8, || format!("PT involution defect {back:.3e}"))?;
        let local = kron(&rng.unitary(da), &rng.unitary(db));
        let turned = local.matmul(s.rho()).and_then(|m| m.matmul(&local.adjoint())).map_err(|e| e.to_string())?;
        let base = sorted_eigs(&pt);
        for other in [partial_transpose_matrix(&turned, da, db), partial_transpose_first(s.rho(), da, db)] {
            let spread = base.iter().zip(sorted_eigs(&other)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            ensure(spread <= 1e-8, || format!("PT spectrum moved by {spread:.3e} under a local basis change"))?;
            worst_pt = worst_pt.max(spread);
        }
    }
    Ok(format!(
        "200/200 mixtures INCONCLUSIVE (slowest {slowest:.2}s), eigen reconstruction {worst_eig:.1e}, PT spectrum spread {worst_pt:.1e}"
    ))
}

fn lemma_suite() -> Outcome {
    let mut decs: Vec<(String, BipartiteState, SeparableDecomposition)> = Vec::new();
    for (which, fam) in [(FourierFamily::RhoSymmetric, "rho_symmetric"), (FourierFamily::SigmaSymmetric, "sigma_symmetric")] {
        let s = state_family(fam, None).map_err(|e| e.to_string())?;
        for n in which.min_points()..which.min_points() + 6 {
            decs.push((format!("{fam} N={n}"), s.clone(), fourier_decomposition(which, n).map_err(|e| e.to_string())?));
        }
    }
    let mut rng = SeededRng::new(23);
    for k in 0..40 {
        let (da, db) = if k % 2 == 0 { (3, 3) } else { (2, 4) };
        let d = random_decomposition(&mut rng, da, db, 2 + k % 5);
        let s = BipartiteState::new(da, db, d.operator()).map_err(|e| e.to_string())?;
        decs.push((format!("random mixture {k}"), s, d));
    }
    let tol = Tolerances::default();
    let (mut worst_res, mut worst_dev) = (0.0f64, 0.0f64);
    for (name, s, d) in &decs {
        let v = verify_decomposition(s, d, 1e-10).map_err(|e| e.to_string())?;
        ensure(v.verified, || format!("{name}: not verified ({:.3e})", v.deviation))?;
        let ran = range_of(s.rho(), tol.tol_rank);
        let ran_pt = range_of(&s.partial_transpose(), tol.tol_rank);
        for (p, q) in d.product_vectors().iter().zip(d.partial_conjugates()) {
            let (r1, r2) = (ran.residual(p), ran_pt.residual(&q));
            ensure(r1 <= 1e-7 && r2 <= 1e-7, || format!("{name}: residuals {r1:.2e}, {r2:.2e}"))?;
            worst_res = worst_res.max(r1).max(r2);
        }
        let dev = conjugated_deviation(s, d);
        ensure(dev <= 1e-10, || format!("{name}: conjugated ensemble off T2 by {dev:.3e}"))?;
        worst_dev = worst_dev.max(dev);
    }
    Ok(format!("{} decompositions, max residual {worst_res:.1e}, T2 reconstruction {worst_dev:.1e}", decs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("NPT detection", npt_detection),
        ("PPT of the families", ppt_families),
        ("range-criterion detection", range_detection),
        ("solver fidelity", solver_fidelity),
        ("criterion independence", criterion_independence),
        ("separable decompositions", decompositions),
        ("soundness suite", soundness),
        ("range-membership suite", lemma_suite),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} ({secs:.1}s)", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
