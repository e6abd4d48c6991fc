//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spinmoments::collective::{build_o_a, collective_lambdas};
use spinmoments::criteria::{
    obs1_decide, obs2_check, obs2_from_estimate, obs2_qudit_check, obs3_check, obs4_check, p_star,
    scan_regions, DEFAULT_TOL,
};
use spinmoments::linalg::{eigvalsh, rank, ComplexMatrix, PartyStructure};
use spinmoments::moments::{
    d_closed_form, d_mc, j1_closed_form, moment_mc, moments_mc, obs1_moments, sample_haar_su2,
    t_average, two_ensemble_lhs, MomentSpec, SamplingMode,
};
use spinmoments::sepbound::{
    conjectured_bound, optimize_fully_sep_bound, tangential_gradient, triple_sum,
    triple_sum_gradient,
};
use spinmoments::states::{
    depolarize, dicke, product_state, random, BlochVectorSet, DensityMatrix,
};
use spinmoments::stats::{
    budget, c_coeffs, coverage_simulation, expected_f1_squared, noisy_singlet, simulate_shots,
    unbiased_f1,
};
use spinmoments::Execution;

const EXEC: Execution = Execution::Parallel;

/// Sub-check outcomes of one criterion.
#[derive(Default)]
struct Report {
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn real_sym(m: &[[f64; 3]; 3]) -> ComplexMatrix {
    ComplexMatrix::from_fn(3, 3, |i, j| C64::new(m[i][j], 0.0))
}

fn criterion_1(r: &mut Report) {
    let spec = MomentSpec::obs2(1).unwrap();
    for n in [4, 6, 8] {
        for p in [0.0, 0.3, 0.9] {
            let start = Instant::now();
            let rho = noisy_singlet(n, p, 1).unwrap();
            let e = moment_mc(&rho, &spec, 10_000, 7, SamplingMode::Direction, EXEC).unwrap();
            let expected = 3.0 * n as f64 * p / 4.0;
            let elapsed = start.elapsed();
            r.check(
                (e.mean - expected).abs() <= 3.0 * e.std_error + 1e-9,
                || format!("N={n} p={p}: {} ± {} vs {expected}", e.mean, e.std_error),
            );
            r.check(elapsed <= Duration::from_secs(10), || {
                format!("N={n} p={p}: {elapsed:?}")
            });
        }
        let step = 0.01;
        let below =
            obs2_check(&noisy_singlet(n, 2.0 / 3.0 - step, 1).unwrap(), DEFAULT_TOL).unwrap();
        let above =
            obs2_check(&noisy_singlet(n, 2.0 / 3.0 + step, 1).unwrap(), DEFAULT_TOL).unwrap();
        r.check(below.violated && !above.violated, || {
            format!("N={n}: verdict does not flip across p = 2/3")
        });
        // the Monte Carlo verdict agrees away from the threshold
        let rho = noisy_singlet(n, 0.3, 1).unwrap();
        let e = moment_mc(&rho, &spec, 10_000, 9, SamplingMode::Direction, EXEC).unwrap();
        r.check(obs2_from_estimate(&e, n, DEFAULT_TOL).violated, || {
            format!("N={n}: MC verdict at p=0.3")
        });
    }
}

fn criterion_2(r: &mut Report) {
    let mut g = rng(2);
    let spec_for = |n| MomentSpec::obs1(n, 1).unwrap();
    let mut decisive = 0;
    for case in 0..100 {
        let n = 3 + case % 4;
        let rank = 1 + case % 3;
        let rho = random::symmetric_state(n, rank, &mut g);
        let m = obs1_moments(&rho).unwrap();
        let v = obs1_decide(m.m1, m.m2, m.m3, DEFAULT_TOL).unwrap();
        let recovered: Vec<f64> =
            serde_json::from_value(v.diagnostics["eigenvalues"].clone()).unwrap();
        let mut direct = eigvalsh(&real_sym(&m.covariance.entries)).unwrap();
        direct.sort_by(f64::total_cmp);
        let err = recovered
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        r.check(err <= 1e-8, || {
            format!("case {case}: eigenvalue error {err:e}")
        });

        let min_eig = direct[0];
        if min_eig.abs() > 0.05 {
            decisive += 1;
            let est = moments_mc(
                &rho,
                &spec_for(n),
                3,
                100_000,
                case as u64,
                SamplingMode::Direction,
                EXEC,
            )
            .unwrap();
            let mc = obs1_decide(est[0].mean, est[1].mean, est[2].mean, 1e-2);
            let expected = min_eig < 0.0;
            r.check(matches!(&mc, Ok(mv) if mv.violated == expected), || {
                format!("case {case}: MC verdict {mc:?}, exact min eigenvalue {min_eig}")
            });
        }
    }
    r.check(decisive > 0, || "no decisive cases".into());
}

fn criterion_3(r: &mut Report) {
    let mut ev = eigvalsh(build_o_a(3).unwrap().matrix()).unwrap();
    ev.sort_by(f64::total_cmp);
    let t = 2.0 * 3f64.sqrt();
    let expected = [-t, -t, 0.0, 0.0, 0.0, 0.0, t, t];
    let err = ev
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    r.check(err <= 1e-9, || format!("N=3 spectrum error {err:e}"));
    for (n, want) in [(4, 6), (5, 24), (6, 38)] {
        let start = Instant::now();
        let got = rank(build_o_a(n).unwrap().matrix(), 1e-9).unwrap();
        let elapsed = start.elapsed();
        r.check(got == want, || {
            format!("N={n}: rank {got}, expected {want}")
        });
        r.check(elapsed <= Duration::from_secs(60), || {
            format!("N={n}: {elapsed:?}")
        });
    }
}

fn criterion_4(r: &mut Report) {
    for n in 3..=7 {
        let res = optimize_fully_sep_bound(n, 500, 4, 1e-9, EXEC).unwrap();
        let target = conjectured_bound(n).unwrap();
        r.check((res.best_value - target).abs() <= 1e-6, || {
            format!("N={n}: optimum {} vs {target}", res.best_value)
        });
        let cone = BlochVectorSet::cone_configuration(n).vectors();
        let g = tangential_gradient(&cone);
        let gmax = g.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
        r.check(gmax <= 1e-8, || {
            format!("N={n}: cone tangential gradient {gmax:e}")
        });
    }
    let mut g = rng(44);
    for n in 3..=7 {
        let vs: Vec<[f64; 3]> = (0..n).map(|_| random::unit_vector(&mut g)).collect();
        let grad = triple_sum_gradient(&vs);
        let h = 1e-6;
        for i in 0..n {
            for c in 0..3 {
                let mut plus = vs.clone();
                let mut minus = vs.clone();
                plus[i][c] += h;
                minus[i][c] -= h;
                let fd = (triple_sum(&plus) - triple_sum(&minus)) / (2.0 * h);
                let rel = (fd - grad[i][c]).abs() / grad[i][c].abs().max(1.0);
                r.check(rel <= 1e-6, || {
                    format!("N={n} ({i},{c}): relative error {rel:e}")
                });
            }
        }
    }
}

fn criterion_5(r: &mut Report) {
    let step = 0.01;
    let start = Instant::now();
    let rows = scan_regions(3, step, DEFAULT_TOL, EXEC).unwrap();
    let elapsed = start.elapsed();
    let boundary = 1.0 / (2.0 * 3f64.sqrt());
    let mut misplaced = 0;
    for row in &rows {
        let detected = row.t_abs > row.fs_bound + DEFAULT_TOL;
        let s = row.x + row.y;
        if (s - boundary).abs() > step && detected != (s > boundary) {
            misplaced += 1;
        }
    }
    r.check(misplaced == 0, || {
        format!("{misplaced} points off the x + y = 1/(2√3) boundary")
    });
    let bound_entangled = rows
        .iter()
        .filter(|row| row.ppt_all && row.t_abs > 1.0)
        .count();
    r.check(bound_entangled > 0, || "no PPT point with |𝒯| > 1".into());
    r.check(elapsed <= Duration::from_secs(300), || {
        format!("scan took {elapsed:?}")
    });
}

fn criterion_6(r: &mut Report) {
    let d42 = dicke(4, 2).unwrap().density();
    let lhs = two_ensemble_lhs(&d42, 2).unwrap();
    r.check((lhs.value - 2.25).abs() <= 1e-9, || {
        format!("dense LHS on |D_4,2⟩ is {}, expected 2.25", lhs.value)
    });

    // smallest Dicke weight p at which the dense LHS exceeds 1
    let lhs_at = |p: f64| {
        two_ensemble_lhs(&depolarize(&d42, 1.0 - p).unwrap(), 2)
            .unwrap()
            .value
    };
    let threshold = if lhs_at(1.0) <= 1.0 + DEFAULT_TOL {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lhs_at(mid) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    r.check((threshold - 2.0 / 3.0).abs() <= 1e-9, || {
        format!("dense depolarized threshold at p = {threshold}, expected 2/3")
    });
    r.check((p_star(2) - 2.0 / 3.0).abs() <= 1e-9, || {
        format!("p*(2) = {}", p_star(2))
    });

    let asym = (2.0f64 / 3.0).sqrt();
    let err = (p_star(1_000_000) - asym).abs();
    r.check(err <= 1e-6, || {
        format!("p*(10⁶) off the asymptote by {err:e}")
    });

    let mut g = rng(6);
    for n in [2usize, 3] {
        let mut states = vec![dicke(2 * n, n).unwrap().density()];
        states.push(depolarize(&states[0], 0.3).unwrap());
        states.push(random::symmetric_state(2 * n, 2, &mut g));
        let a = random::symmetric_state(n, 2, &mut g);
        let b = random::symmetric_state(n, 1, &mut g);
        states.push(a.tensor(&b).unwrap());
        for (i, rho) in states.iter().enumerate() {
            match two_ensemble_lhs(rho, n) {
                Ok(l) => r.check((l.value - l.eta_form).abs() <= 1e-9, || {
                    format!(
                        "N={n} state {i}: forms differ by {:e}",
                        (l.value - l.eta_form).abs()
                    )
                }),
                Err(e) => r.check(false, || format!("N={n} state {i}: {e}")),
            }
        }
        let v = obs4_check(&states[0], n, DEFAULT_TOL).unwrap();
        r.check(v.value.is_finite(), || {
            format!("N={n}: obs4 value not finite")
        });
    }
}

fn lambda_variance_sum(rho: &DensityMatrix, n: usize, d: usize) -> f64 {
    collective_lambdas(n, d)
        .unwrap()
        .iter()
        .map(|op| {
            let m = op.matrix();
            rho.expect(&m.matmul(m)) - rho.expect(m).powi(2)
        })
        .sum()
}

fn criterion_7(r: &mut Report) {
    let s = PartyStructure::new(2, 3);
    let mut g = rng(7);
    for i in 0..20 {
        let rho = random::mixed_state(s, 1 + i % 9, &mut g);
        let direct = lambda_variance_sum(&rho, 2, 3);
        let closed = d_closed_form(&rho, 3).unwrap();
        r.check((direct - closed).abs() <= 1e-9, || {
            format!("state {i}: closed form {closed} vs {direct}")
        });
        let e = d_mc(&rho, 10_000, 100 + i as u64, EXEC).unwrap();
        r.check((e.mean - direct).abs() <= 3.0 * e.std_error + 1e-12, || {
            format!("state {i}: MC {} ± {} vs {direct}", e.mean, e.std_error)
        });
    }
    let mut violations = 0;
    for _ in 0..500 {
        let rho = random::product_pure(2, 3, &mut g).density();
        if obs2_qudit_check(&rho, DEFAULT_TOL).unwrap().violated {
            violations += 1;
        }
    }
    r.check(violations == 0, || {
        format!("{violations} product states violate the bound")
    });
}

fn criterion_8(r: &mut Report) {
    let c = c_coeffs(2).unwrap();
    r.check(c == [0.5, -2.0, 1.5, 0.0, 0.0], || {
        format!("c_coeffs(2) = {c:?}")
    });

    let rho = noisy_singlet(4, 0.5, 3).unwrap();
    let u = [0.0, 0.6, 0.8];
    for k in [2usize, 4, 16] {
        let exact = expected_f1_squared(&rho, u, k).unwrap();
        let batches = 100_000u64;
        let sum: f64 = (0..batches)
            .map(|b| {
                unbiased_f1(&simulate_shots(&rho, u, k, b).unwrap())
                    .unwrap()
                    .powi(2)
            })
            .sum();
        let sim = sum / batches as f64;
        let rel = (sim - exact).abs() / exact;
        r.check(rel <= 0.02, || {
            format!("K={k}: simulated {sim} vs closed form {exact}")
        });
    }

    let b = budget(100, 0.95, 2, 50.0).unwrap();
    r.check(b.m == 86 && b.m_tot == 172, || {
        format!("budget M={} M_tot={}", b.m, b.m_tot)
    });

    let cov = coverage_simulation(6, 0.0, 0.95, 4, 1000, 8, EXEC).unwrap();
    r.check(cov.failure_rate <= 0.05, || {
        format!("failure rate {}", cov.failure_rate)
    });
}

fn criterion_9(r: &mut Report) {
    let mut g = rng(9);
    for n in [3usize, 4] {
        let states = [
            random::mixed_state(PartyStructure::qubits(n), 3, &mut g),
            random::symmetric_state(n, 2, &mut g),
            dicke(n, 1).unwrap().density(),
        ];
        for (i, rho) in states.iter().enumerate() {
            let j1 = j1_closed_form(rho).unwrap();
            let t = t_average(rho).unwrap();
            let m = obs1_moments(rho).ok();
            let mut drift = 0.0f64;
            for _ in 0..20 {
                let u = sample_haar_su2(&mut g);
                let rot = rho.rotate_collective(&u);
                drift = drift
                    .max((j1_closed_form(&rot).unwrap() - j1).abs())
                    .max((t_average(&rot).unwrap() - t).abs());
                if let Some(m) = m {
                    let mr = obs1_moments(&rot).unwrap();
                    drift = drift
                        .max((mr.m1 - m.m1).abs())
                        .max((mr.m2 - m.m2).abs())
                        .max((mr.m3 - m.m3).abs());
                }
            }
            r.check(drift <= 1e-9, || {
                format!("N={n} state {i}: drift {drift:e}")
            });

            for spec in [
                MomentSpec::obs2(2).unwrap(),
                MomentSpec::obs4(n, 1).unwrap(),
            ] {
                let a = moment_mc(rho, &spec, 20_000, 90, SamplingMode::Direction, EXEC).unwrap();
                let b = moment_mc(rho, &spec, 20_000, 91, SamplingMode::Unitary, EXEC).unwrap();
                let z = a.z_distance(&b);
                r.check(z <= 4.0, || {
                    format!("N={n} state {i}: direction/unitary z = {z}")
                });
            }
        }
    }

    let mut false_violations = Vec::new();
    for case in 0..1000u64 {
        let n = 3 + (case % 2) as usize;
        let rho = random::separable_state(n, 2, 4, &mut g);
        for v in [
            obs2_check(&rho, DEFAULT_TOL).unwrap(),
            obs3_check(&rho, DEFAULT_TOL).unwrap(),
        ] {
            if v.violated {
                false_violations.push(format!("case {case}: {} margin {}", v.criterion, v.margin));
            }
        }
        // symmetric separable states for the covariance criterion
        let terms = 1 + (case % 3) as usize;
        let parts: Vec<DensityMatrix> = (0..terms)
            .map(|_| {
                let a = random::unit_vector(&mut g);
                product_state(&BlochVectorSet::from_vectors(&vec![a; n]))
                    .unwrap()
                    .density()
            })
            .collect();
        let w = 1.0 / terms as f64;
        let mix: Vec<(f64, &DensityMatrix)> = parts.iter().map(|p| (w, p)).collect();
        let sym = DensityMatrix::mixture(&mix).unwrap();
        let m = obs1_moments(&sym).unwrap();
        match obs1_decide(m.m1, m.m2, m.m3, DEFAULT_TOL) {
            Ok(v) if v.violated => {
                false_violations.push(format!("case {case}: obs1 margin {}", v.margin))
            }
            _ => {}
        }
    }
    r.check(false_violations.is_empty(), || {
        format!(
            "{} false violations, first: {}",
            false_violations.len(),
            false_violations[0]
        )
    });
}

type Criterion = (&'static str, fn(&mut Report));

fn main() {
    let criteria: [Criterion; 9] = [
        ("collective variance pipeline", criterion_1),
        ("covariance eigenvalue inversion", criterion_2),
        ("antisymmetric observable spectrum", criterion_3),
        ("fully separable bound optimizer", criterion_4),
        ("phased-Dicke region scan", criterion_5),
        ("two-ensemble criterion", criterion_6),
        ("qudit variance criterion", criterion_7),
        ("finite-shot statistics", criterion_8),
        ("invariance and soundness", criterion_9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion_{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut report = Report::default();
        run(&mut report);
        let secs = start.elapsed().as_secs_f64();
        if report.failures.is_empty() {
            println!("{id} ({name}): PASS [{secs:.1}s]");
        } else {
            failed += 1;
            println!("{id} ({name}): FAIL [{secs:.1}s]");
            for f in &report.failures {
                println!("    {f}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
