//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{group_of, Group};
use morsefam::algebra::IntMatrix;
use morsefam::checks::{run_check, CheckError, CheckOptions};
use morsefam::cubical::{
    assemble_cubical, klein_cubical, mayer_vietoris, torus_cubical, Cubulation,
};
use morsefam::family::{
    assemble, e2_crosscheck, family_homology, family_pages, identity_continuation, poincare_check,
    verify_family_continuation, FamilyDescriptor,
};
use morsefam::flowcount::{
    emit_continuation, emit_cubical, emit_descriptor, recipe, regularity_check, Metric, Tolerances,
};
use morsefam::library;
use morsefam::morse::{circle_monodromy, morse_homology, MorseData};
use morsefam::novikov::{
    circle_one_form, novikov_homology, reference_rescaling_check, torus_with_fiber_class,
    CoeffLattice, Mode, NovikovComplexData, NovikovHomology,
};
use morsefam::spectral::{associated_graded_check, rational_page_dims, Page, SpectralSequence};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Table = BTreeMap<(i64, i64), Group>;
type Outcome = Result<(), String>;

fn table(p: &Page) -> Table {
    p.groups()
        .iter()
        .map(|(&k, g)| (k, group_of(g)))
        .filter(|(_, g)| *g != (0, vec![]))
        .collect()
}

fn t(entries: &[((i64, i64), usize, &[i128])]) -> Table {
    entries
        .iter()
        .map(|&(k, f, tors)| (k, (f, tors.to_vec())))
        .collect()
}

fn pad(mut v: Vec<Group>, n: usize) -> Vec<Group> {
    while v.len() < n {
        v.push((0, vec![]));
    }
    while v.len() > n && v.last() == Some(&(0, vec![])) {
        v.pop();
    }
    v
}

fn same_groups(a: Vec<Group>, b: Vec<Group>) -> bool {
    let n = a.len().max(b.len());
    pad(a, n) == pad(b, n)
}

fn homology_of(d: &FamilyDescriptor) -> Result<Vec<Group>, String> {
    let c = assemble(d).map_err(|e| e.to_string())?;
    Ok(family_homology(&c).groups.iter().map(group_of).collect())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pages(d: &FamilyDescriptor) -> Result<SpectralSequence, String> {
    Ok(family_pages(&assemble(d).map_err(|e| e.to_string())?))
}

fn klein_vs_cellular() -> Outcome {
    let h = homology_of(&library::klein())?;
    ensure(same_groups(h.clone(), common::klein_cellular()), || {
        format!("HF = {h:?}")
    })?;
    let e2 = table(pages(&library::klein())?.page(2));
    let want = t(&[((0, 0), 1, &[]), ((1, 0), 1, &[]), ((0, 1), 0, &[2])]);
    ensure(e2 == want, || format!("E2 = {e2:?}"))
}

fn torus_collapse() -> Outcome {
    let ss = pages(&library::torus())?;
    ensure(ss.collapses_at(2), || "no collapse at E2".into())?;
    let h = homology_of(&library::torus())?;
    ensure(same_groups(h.clone(), common::torus_cellular()), || {
        format!("HF = {h:?}")
    })
}

fn leray_serre() -> Outcome {
    let z4 = t(&[
        ((0, 0), 1, &[]),
        ((1, 0), 1, &[]),
        ((0, 1), 1, &[]),
        ((1, 1), 1, &[]),
    ]);
    let klein = t(&[((0, 0), 1, &[]), ((1, 0), 1, &[]), ((0, 1), 0, &[2])]);
    let s1s2 = t(&[
        ((0, 0), 1, &[]),
        ((1, 0), 1, &[]),
        ((0, 2), 1, &[]),
        ((1, 2), 1, &[]),
    ]);
    let sphere_e2 = t(&[
        ((0, 0), 1, &[]),
        ((2, 0), 1, &[]),
        ((0, 1), 1, &[]),
        ((2, 1), 1, &[]),
    ]);
    let cases: Vec<(&str, Table, Table, BTreeMap<(i64, i64), usize>)> = vec![
        ("torus", z4.clone(), z4.clone(), BTreeMap::new()),
        ("rotating_torus", z4.clone(), z4, BTreeMap::new()),
        ("klein", klein.clone(), klein, BTreeMap::new()),
        ("s2_combinatorial", s1s2.clone(), s1s2, BTreeMap::new()),
        (
            "sphere_base_toy",
            sphere_e2.clone(),
            t(&[((0, 0), 1, &[]), ((2, 1), 1, &[])]),
            BTreeMap::from([((2, 0), 1)]),
        ),
        (
            "sphere_base_toy2",
            sphere_e2,
            t(&[((0, 0), 1, &[]), ((0, 1), 0, &[2]), ((2, 1), 1, &[])]),
            BTreeMap::from([((2, 0), 1)]),
        ),
    ];
    for (name, e2, einf, d2) in cases {
        let ss = pages(&library::descriptor(name).expect("known"))?;
        let got = (
            table(ss.page(2)),
            table(ss.infinity()),
            ss.page(2).differential_ranks(),
        );
        ensure(got == (e2, einf, d2), || format!("{name}: {got:?}"))?;
    }
    Ok(())
}

/// Groups and `d_r` ranks of `E^r` for `r ≥ 2`; the `E^1` terms depend on the cell structure.
fn page_signature(ss: &SpectralSequence) -> Vec<(Table, BTreeMap<(i64, i64), usize>)> {
    let last = ss.pages().len().max(2);
    (2..=last)
        .map(|r| (table(ss.page(r)), ss.page(r).differential_ranks()))
        .collect()
}

fn cubical_matches(k: &Cubulation, d: &FamilyDescriptor, what: &str) -> Outcome {
    let kc = assemble_cubical(k).map_err(|e| e.to_string())?;
    let mut a = page_signature(&SpectralSequence::compute(&kc.filtered));
    let mut b = page_signature(&pages(d)?);
    // pages past the last computed one repeat it
    let n = a.len().max(b.len());
    a.resize(n, a.last().cloned().expect("nonempty"));
    b.resize(n, b.last().cloned().expect("nonempty"));
    ensure(a == b, || format!("{what}: {a:?} vs {b:?}"))
}

fn cubical_vs_family() -> Outcome {
    cubical_matches(&klein_cubical(), &library::klein(), "klein")?;
    cubical_matches(&torus_cubical(), &library::torus(), "torus")?;
    let tol = Tolerances::default();
    for (name, d) in [("klein", library::klein()), ("torus", library::torus())] {
        let (k, _) = emit_cubical(&recipe(name).map_err(|e| e.to_string())?, &tol, 0)
            .map_err(|e| e.to_string())?;
        cubical_matches(&k, &d, &format!("emitted {name}"))?;
    }
    Ok(())
}

fn betti(h: &[Group]) -> Vec<usize> {
    h.iter().map(|g| g.0).collect()
}

fn poincare() -> Outcome {
    for name in ["torus", "s2_combinatorial"] {
        let d = library::descriptor(name).expect("known");
        let r = poincare_check(&d).map_err(|e| e.to_string())?;
        ensure(r.holds(), || format!("{name}: {r:?}"))?;
        let b = betti(&homology_of(&d)?);
        let dim = d.dim_base + d.fiber_dim;
        let b = pad(b.into_iter().map(|x| (x, vec![])).collect(), dim + 1);
        ensure(b.iter().eq(b.iter().rev()), || {
            format!("{name}: Betti {b:?}")
        })?;
    }
    let opts = CheckOptions {
        example: Some("klein".into()),
        ..Default::default()
    };
    ensure(
        matches!(
            run_check("poincare", &opts),
            Err(CheckError::Unsupported(_))
        ),
        || "Klein bottle not refused".into(),
    )
}

fn monodromy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..10 {
        let n = rng.gen_range(1..=3);
        let phi = common::random_unimodular(&mut rng, n);
        let m = IntMatrix::from_rows(&phi);
        let (coker, ker) = circle_monodromy(&m).map_err(|e| e.to_string())?;
        let want = common::monodromy_coker_ker(&phi);
        let got = (group_of(&coker), group_of(&ker));
        ensure(got == want, || {
            format!("trial {trial}: Φ = {phi:?}: {got:?} vs {want:?}")
        })?;
        let ss = pages(&library::circle_monodromy_family(&m, 0))?;
        let e2 = (
            group_of(&ss.page(2).group(0, 0)),
            group_of(&ss.page(2).group(1, 0)),
        );
        ensure(e2 == want, || {
            format!("trial {trial}: E2 columns {e2:?} vs {want:?}")
        })?;
    }
    Ok(())
}

fn random_families() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut higher, mut torsion) = (0, 0);
    for trial in 0..200 {
        let rf = common::random_family(&mut rng, 16);
        let d = &rf.descriptor;
        let c = assemble(d).map_err(|e| format!("trial {trial}: {e}"))?;
        let e2 = e2_crosscheck(d).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(e2.agrees(), || {
            format!("trial {trial}: E2 mismatch at {:?}", e2.first_mismatch)
        })?;
        let ss = family_pages(&c);
        ensure(associated_graded_check(&c.filtered, &ss).is_ok(), || {
            format!("trial {trial}: graded homology differs from E∞")
        })?;
        let h: Vec<Group> = family_homology(&c).groups.iter().map(group_of).collect();
        let want = rf.homology();
        ensure(same_groups(h.clone(), want.clone()), || {
            format!("trial {trial}: {h:?} vs {want:?}")
        })?;
        higher += usize::from(d.blocks.iter().any(|b| b.k >= 2));
        torsion += usize::from(want.iter().any(|g| !g.1.is_empty()));
    }
    ensure(higher >= 20 && torsion >= 20, || {
        format!("too few interesting samples: {higher} with k ≥ 2 blocks, {torsion} with torsion")
    })
}

fn continuation() -> Outcome {
    let tol = Tolerances::default();
    for name in ["klein", "torus"] {
        let a = recipe(name).map_err(|e| e.to_string())?;
        let b = a.with_metric(Metric::seeded(0.1, 29));
        let (c, _) = emit_continuation(&a, &b, &tol, 0).map_err(|e| e.to_string())?;
        let r = verify_family_continuation(&c).map_err(|e| e.to_string())?;
        ensure(r.equivalence(), || format!("{name}: {r:?}"))?;
        ensure(homology_of(&c.source)? == homology_of(&c.target)?, || {
            format!("{name}: endpoints differ")
        })?;
        let (id, _) = emit_continuation(&a, &a, &tol, 0).map_err(|e| e.to_string())?;
        ensure(id == identity_continuation(&id.source), || {
            format!("{name}: constant family is not the identity")
        })?;
    }
    Ok(())
}

fn integer_homology(c: &morsefam::FamilyComplex) -> Vec<Group> {
    let g = c.complex();
    let dims: Vec<usize> = (0..g.len()).map(|n| g.dim(n)).collect();
    let diffs: Vec<Vec<Vec<i128>>> = (0..g.len()).map(|n| common::to_i128(&g.d(n))).collect();
    common::homology(&dims, &diffs)
}

fn flat_collapse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..30 {
        let (d, base) = common::random_flat_family(&mut rng);
        let c = assemble(&d).map_err(|e| format!("trial {trial} ({base:?}): {e}"))?;
        let dims = rational_page_dims(&c.filtered, 2);
        let b = betti(&integer_homology(&c));
        let mut sums = vec![0; b.len()];
        for ((i, j), v) in dims {
            sums[(i + j) as usize] += v;
        }
        ensure(sums == b, || {
            format!("trial {trial} ({base:?}): E2 {sums:?} vs Betti {b:?}")
        })?;
        ensure(family_pages(&c).collapses_rationally_at(2), || {
            format!("trial {trial} ({base:?}): rational differential past E2")
        })?;
    }
    let ss = pages(&library::projective_torsion_family())?;
    let free = |p: &Page| -> BTreeMap<(i64, i64), usize> {
        table(p)
            .into_iter()
            .map(|(k, g)| (k, g.0))
            .filter(|(_, r)| *r > 0)
            .collect()
    };
    ensure(!ss.collapses_at(2), || {
        "projective torsion family collapses".into()
    })?;
    ensure(ss.collapses_rationally_at(2), || {
        "rational differential".into()
    })?;
    ensure(free(ss.page(2)) == free(ss.infinity()), || {
        "free ranks differ".into()
    })?;
    ensure(table(ss.page(2)) != table(ss.infinity()), || {
        "torsion unchanged".into()
    })
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn novikov() -> Outcome {
    // (1 − e^a)⁻¹ with ω(a) = −1 is Σ e^{ka}; (1 − e^{−a})⁻¹ = −Σ_{k≥1} e^{ka}
    for (omega, a) in [(vec![1i64], vec![-1i64]), (vec![2, 3], vec![1, -1])] {
        let lat = CoeffLattice::from_i64(&omega);
        let mono =
            |k: i64, c: i64| lat.int_monomial(&a.iter().map(|x| k * x).collect::<Vec<_>>(), c);
        let up = lat
            .sub(&lat.one(), &mono(1, 1))
            .map_err(|e| e.to_string())?;
        let down = lat
            .sub(&lat.one(), &mono(-1, 1))
            .map_err(|e| e.to_string())?;
        for p in 1..=30 {
            let floor = rat(-p);
            let mut geo = lat.zero();
            let mut neg = lat.zero();
            for k in 0..=p {
                geo = lat.add(&geo, &mono(k, 1)).map_err(|e| e.to_string())?;
                if k >= 1 {
                    neg = lat.add(&neg, &mono(k, -1)).map_err(|e| e.to_string())?;
                }
            }
            for (u, want) in [(&up, &geo), (&down, &neg)] {
                let inv = lat
                    .invert(u, &floor, Mode::Integer)
                    .map_err(|e| e.to_string())?;
                ensure(lat.agree_above(&inv, want, &floor), || {
                    format!("ω = {omega:?}, precision {p}")
                })?;
            }
        }
    }
    let prec = rat(-12);
    let h =
        novikov_homology(&circle_one_form(1), Mode::Integer, &prec).map_err(|e| e.to_string())?;
    ensure(h.vanishes(), || {
        format!("circle with exact-free form: {h:?}")
    })?;
    let h =
        novikov_homology(&circle_one_form(0), Mode::Integer, &prec).map_err(|e| e.to_string())?;
    ensure(!h.vanishes(), || {
        "exact form gave vanishing homology".into()
    })?;
    let examples: Vec<MorseData> = vec![
        library::circle_fiber(),
        library::sphere_fiber(),
        library::torus_base(),
        library::projective_base(),
        library::sphere_base(),
    ];
    let trivial = CoeffLattice::trivial();
    for m in &examples {
        let n = NovikovComplexData::from_morse(&trivial, m);
        let h = novikov_homology(&n, Mode::Integer, &prec).map_err(|e| e.to_string())?;
        let want = morse_homology(m).map_err(|e| e.to_string())?;
        ensure(h == NovikovHomology::Exact(want.clone()), || {
            format!("{h:?} vs {want:?}")
        })?;
    }
    for c in [1, 2] {
        let f = torus_with_fiber_class(c);
        for a in [-2, -1, 1, 3] {
            let r = reference_rescaling_check(&f, &[a], &prec).map_err(|e| e.to_string())?;
            ensure(r.ok(), || format!("c = {c}, A = {a}: {r:?}"))?;
        }
    }
    Ok(())
}

fn flowcount() -> Outcome {
    let tol = Tolerances::default();
    let fixture: FamilyDescriptor =
        serde_json::from_str(include_str!("fixtures/klein_descriptor.json"))
            .map_err(|e| e.to_string())?;
    let klein = recipe("klein").map_err(|e| e.to_string())?;
    let (d, report) = emit_descriptor(&klein, &tol, 0).map_err(|e| e.to_string())?;
    ensure(d == fixture, || {
        "emitted Klein descriptor differs from the fixture".into()
    })?;
    ensure(d == library::klein(), || {
        "emitted Klein descriptor differs from the library".into()
    })?;
    ensure(report.energy_violations().is_empty(), || {
        "energy bound violated".into()
    })?;
    let (t, _) = emit_descriptor(&recipe("torus").map_err(|e| e.to_string())?, &tol, 0)
        .map_err(|e| e.to_string())?;
    ensure(t == library::torus(), || {
        "emitted torus descriptor differs".into()
    })?;
    let r = regularity_check(&klein, &tol, 0, 1e-3, 5).map_err(|e| e.to_string())?;
    ensure(r.stable(), || format!("regularity: {r:?}"))
}

fn ids(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn mayer_vietoris_exact() -> Outcome {
    let u = ids(&["v0", "v1", "e0"]);
    let v = ids(&["v0", "v1", "e1"]);
    let arcs = |k1: &[i128], k2: usize| -> Vec<(String, Group)> {
        vec![
            ("HF_0(U∩V)".into(), (2, vec![])),
            ("HF_1(U∩V)".into(), (2, vec![])),
            ("HF_0(U)+HF_0(V)".into(), (2, vec![])),
            ("HF_1(U)+HF_1(V)".into(), (2, vec![])),
            ("HF_0(K)".into(), (1, vec![])),
            ("HF_1(K)".into(), (2 - k1.len(), k1.to_vec())),
            ("HF_2(K)".into(), (k2, vec![])),
        ]
    };
    let tol = Tolerances::default();
    let emitted = emit_cubical(&recipe("klein").map_err(|e| e.to_string())?, &tol, 0)
        .map_err(|e| e.to_string())?
        .0;
    for (name, k, want) in [
        ("klein", klein_cubical(), arcs(&[2], 0)),
        ("torus", torus_cubical(), arcs(&[], 1)),
        ("emitted klein", emitted, arcs(&[2], 0)),
    ] {
        let mv = mayer_vietoris(&k, &u, &v).map_err(|e| e.to_string())?;
        ensure(mv.exact(), || format!("{name}: not exact"))?;
        let got: BTreeMap<&str, Group> = mv
            .nodes
            .iter()
            .map(|n| (n.name.as_str(), group_of(&n.group)))
            .collect();
        for (node, g) in &want {
            let have = got.get(node.as_str()).cloned().unwrap_or((0, vec![]));
            ensure(&have == g, || {
                format!("{name}: {node} = {have:?}, expected {g:?}")
            })?;
        }
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        (
            "Klein family matches the cellular Klein bottle",
            klein_vs_cellular,
        ),
        (
            "trivial torus collapses at E2 with the right homology",
            torus_collapse,
        ),
        ("Leray-Serre pages of the tabulated bundles", leray_serre),
        ("cubical and family pages agree", cubical_vs_family),
        (
            "Poincare duality holds for oriented examples and Klein is refused",
            poincare,
        ),
        (
            "circle monodromy homology is coker and ker of Phi - 1",
            monodromy,
        ),
        (
            "random families: complex, E2, E-infinity and homology",
            random_families,
        ),
        ("continuation maps are filtered equivalences", continuation),
        (
            "flat families collapse over Q, torsion obstruction over Z",
            flat_collapse,
        ),
        (
            "Novikov units, vanishing, trivial lattice and rescaling",
            novikov,
        ),
        (
            "flow counting reproduces the Klein and torus descriptors",
            flowcount,
        ),
        ("Mayer-Vietoris sequences are exact", mayer_vietoris_exact),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        match f() {
            Ok(()) => println!(
                "criterion {:>2}: PASS {name} ({:.2?})",
                n + 1,
                start.elapsed()
            ),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2}: FAIL {name}: {e}", n + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
