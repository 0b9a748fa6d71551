use asis::batch::{solve_many, Execution};
use asis::bounds::{closed_form_rate, majorizing_roots, newton_sequences, steffensen_sequences};
use asis::divdiff::{componentwise_dd, integral_dd, verify_interpolatory};
use asis::orders::q_order;
use asis::problem::apply_scaling;
use asis::{adimensionalize, asis_solve, problems, solve, DividedDifference, LinearScaling, Method, Problem, StoppingCriteria};
use nalgebra::{dvector, DMatrix, DVector};
use proptest::prelude::*;

fn stop() -> StoppingCriteria {
    StoppingCriteria { step_tol: 0.0, res_tol: 1e-14, max_iter: 50 }
}

/// `F(x) = A x + (x ∘ x) ∘ q − r` with a polynomial Jacobian.
fn quadratic_map(m: usize, a: Vec<f64>, q: Vec<f64>, r: Vec<f64>) -> Problem {
    let (a2, q2) = (a.clone(), q.clone());
    Problem::new("quadratic-map", m, move |x: &DVector<f64>| {
        let lin = DMatrix::from_row_slice(m, m, &a) * x;
        DVector::from_fn(m, |i, _| lin[i] + q[i] * x[i] * x[i] - r[i])
    })
    .with_jacobian(move |x: &DVector<f64>| {
        let mut j = DMatrix::from_row_slice(m, m, &a2);
        for i in 0..m {
            j[(i, i)] += 2.0 * q2[i] * x[i];
        }
        j
    })
}

fn map_strategy() -> impl Strategy<Value = (Problem, DVector<f64>, DVector<f64>)> {
    (1usize..=4).prop_flat_map(|m| {
        (
            prop::collection::vec(-3.0..3.0f64, m * m),
            prop::collection::vec(-2.0..2.0f64, m),
            prop::collection::vec(-1.0..1.0f64, m),
            prop::collection::vec(-2.0..2.0f64, m),
            prop::collection::vec(-2.0..2.0f64, m),
        )
            .prop_map(move |(a, q, r, x, y)| {
                (quadratic_map(m, a, q, r), DVector::from_vec(x), DVector::from_vec(y))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn componentwise_is_interpolatory((p, x, y) in map_strategy()) {
        let h = componentwise_dd(&p, &x, &y).unwrap();
        prop_assert!(verify_interpolatory(&h, &p, &x, &y).unwrap() <= 1e-12);
    }

    #[test]
    fn integral_exact_on_quadratics((p, x, y) in map_strategy()) {
        // two Gauss nodes integrate the linear Jacobian path exactly
        let h = integral_dd(&p, &x, &y, 2).unwrap();
        prop_assert!(verify_interpolatory(&h, &p, &x, &y).unwrap() <= 1e-12);
    }

    #[test]
    fn newton_is_scale_equivariant(c in 0.2..5.0f64, k in prop_oneof![-4.0..-0.25f64, 0.25..4.0f64], x0 in -0.5..1.5f64) {
        let f1 = problems::f1();
        let scaled = apply_scaling(&f1, LinearScaling::new(c, k).unwrap());
        let base = solve(&f1, &Method::Newton, &dvector![x0], &stop()).unwrap();
        let tilde = solve(&scaled, &Method::Newton, &dvector![x0 / c], &StoppingCriteria { max_iter: 5, ..stop() }).unwrap();
        for (xt, xb) in tilde.iterates.iter().zip(&base.iterates) {
            prop_assert!((xt[0] * c - xb[0]).abs() <= 1e-12 * xb[0].abs().max(1.0));
        }
    }

    #[test]
    fn asis_trace_is_scale_invariant(c in 0.2..5.0f64, k in 0.25..4.0f64, x0 in -0.5..1.5f64) {
        let f1 = problems::f1();
        let scaled = apply_scaling(&f1, LinearScaling::new(c, k).unwrap());
        let s = StoppingCriteria { max_iter: 4, ..stop() };
        let a = asis_solve(&f1, &dvector![x0], &s, DividedDifference::Componentwise).unwrap();
        let b = asis_solve(&scaled, &dvector![x0 / c], &s, DividedDifference::Componentwise).unwrap();
        for (ya, yb) in a.adimensional.iterates.iter().zip(&b.adimensional.iterates) {
            prop_assert!((ya - yb).norm() <= 1e-10 * ya.norm().max(1.0), "{ya} vs {yb}");
        }
    }

    #[test]
    fn adimensional_form_is_normalized((p, x, _y) in map_strategy()) {
        if let Ok(form) = adimensionalize(&p, &x) {
            prop_assert!((form.problem().norm().vector(&form.problem().evaluate(form.y0()).unwrap()) - 1.0).abs() <= 1e-12);
            let j = form.problem().jacobian(form.y0()).unwrap();
            let eye = DMatrix::<f64>::identity(x.len(), x.len());
            prop_assert!((j + eye).norm() <= 1e-8 * form.problem().norm().operator(&form.problem().jacobian(form.y0()).unwrap()).max(1.0));
        }
    }

    #[test]
    fn bound_invariants(a in 0.0..=0.5f64, n in 1usize..40) {
        let s = steffensen_sequences(a, n).unwrap();
        prop_assert!(s.invariant_residuals().iter().all(|r| r.abs() <= 1e-12));
        for k in 0..s.r.len() {
            let partial: f64 = s.d[..k].iter().sum();
            prop_assert!((partial - s.r[k]).abs() <= 1e-13 * s.r[k].max(1.0));
        }
        let newton = newton_sequences(a, n).unwrap();
        prop_assert!(newton.invariant_residuals().iter().all(|r| r.abs() <= 1e-12));
        for k in 0..newton.d.len() - 1 {
            let d = closed_form_rate(a, newton.d[k]);
            prop_assert!((d - newton.d[k + 1]).abs() <= 1e-12 * newton.d[k + 1].max(f64::MIN_POSITIVE), "k={k}: {d} vs {}", newton.d[k + 1]);
        }
    }

    #[test]
    fn majorizing_roots_are_roots(a in 1e-6..=0.5f64) {
        let r = majorizing_roots(a).unwrap();
        let q = |s: f64| 0.5 * a * s * s - s + 1.0;
        prop_assert!(q(r.s_star).abs() <= 1e-12);
        prop_assert!(r.s_star <= r.s_star_star);
        prop_assert!(q(r.s_star_star).abs() <= 1e-12 * r.s_star_star.powi(2).max(1.0));
    }

    #[test]
    fn q_order_ignores_constant_factor(scale in 1e-3..1e3f64, p in 1.2..3.0f64, k in 0.05..0.9f64) {
        // kept above 1e-10 so that no scaled entry reaches the rounding floor
        let mut e = vec![0.5f64];
        loop {
            let next = k * e.last().unwrap().powf(p);
            if e.len() == 8 || next < 1e-10 {
                break;
            }
            e.push(next);
        }
        prop_assume!(e.len() >= 4);
        let scaled: Vec<f64> = e.iter().map(|v| v * scale).collect();
        let a = q_order(&e).unwrap();
        let b = q_order(&scaled).unwrap();
        prop_assert_eq!(a.per_step.len(), b.per_step.len());
        for (x, y) in a.per_step.iter().zip(&b.per_step) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn parallel_and_sequential_batches_agree() {
    let starts: Vec<_> = (0..32).map(|k| dvector![-0.4 + 0.05 * k as f64, 0.3 - 0.02 * k as f64]).collect();
    let par = solve_many(&problems::example3(), &Method::asis(), &starts, &stop(), Execution::Parallel);
    let seq = solve_many(&problems::example3(), &Method::asis(), &starts, &stop(), Execution::Sequential);
    for (a, b) in par.iter().zip(&seq) {
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a.iterates, b.iterates),
            (Err(a), Err(b)) => assert_eq!(a, b),
            _ => panic!("modes disagree"),
        }
    }
}

#[test]
fn order_notions_agree_on_stable_traces() {
    use asis::orders::{aq_order, r_order};
    use asis::{kantorovich_data, K2Source, KantorovichMode};
    let s = StoppingCriteria { step_tol: 0.0, res_tol: 0.0, max_iter: 100 };
    let runs = [
        (problems::f1(), Method::Newton, dvector![0.0], dvector![1.0]),
        (problems::f1(), Method::asis(), dvector![0.0], dvector![1.0]),
        (problems::f1(), Method::steffensen(), dvector![0.0], dvector![1.0]),
        (problems::f1(), Method::secant(-0.5), dvector![0.0], dvector![1.0]),
        (problems::f1(), Method::halley(), dvector![-2.0], dvector![1.0]),
        (problems::example3(), Method::Newton, dvector![0.0, 0.0], dvector![1.0, -1.0]),
        (problems::example3(), Method::steffensen(), dvector![0.0, 0.0], dvector![1.0, -1.0]),
        (problems::example3(), Method::asis(), dvector![0.0, 0.0], dvector![1.0, -1.0]),
    ];
    let mut stable = 0;
    for (p, m, x0, root) in runs {
        let t = solve(&p, &m, &x0, &s).unwrap();
        let e = t.errors_to(&root);
        let q = q_order(&e).unwrap();
        if !q.stable {
            continue;
        }
        stable += 1;
        let eta = kantorovich_data(&p, &x0, KantorovichMode::Newton, K2Source::Explicit(0.0)).unwrap().eta;
        let aq = aq_order(&t.step_norms, eta).unwrap();
        let r = r_order(&e).unwrap();
        assert!((aq.order - q.order).abs() <= 0.15, "{} on {}: Q {} AQ {}", t.method, t.problem, q.order, aq.order);
        assert!((r.order - q.order).abs() <= 0.2, "{} on {}: Q {} R {}", t.method, t.problem, q.order, r.order);
    }
    assert!(stable >= 2);
}
