//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers (`cargo test --test acceptance -- --nocapture`).

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elgraph::datasets;
use elgraph::energy::{self, DataSet, Embedding};
use elgraph::factorized;
use elgraph::grammar::{self, GrowthConfig};
use elgraph::graph::{Edge, ElasticGraph, ProductGraph, Star};
use elgraph::io;
use elgraph::optimizer::{self, SolverConfig};
use elgraph::run::{run, Mode, RunConfig};

fn p2(lambda: f64) -> ElasticGraph {
    ElasticGraph::new(2, vec![Edge::new(0, 1, lambda)], vec![]).unwrap()
}

#[test]
fn c1_spring_decomposition_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..1000 {
        let k = rng.random_range(2..=6usize);
        let dim = rng.random_range(1..=10usize);
        let mu = rng.random_range(0.01..10.0);
        let star = Star::new(0, (1..=k).collect(), mu);
        let coords = (0..(k + 1) * dim)
            .map(|_| rng.random_range(-100.0..100.0))
            .collect();
        let emb = Embedding::from_flat(k + 1, dim, coords).unwrap();
        let d = energy::star_spring_decomposition(&star, &emb).unwrap();
        assert!(
            (d.direct - d.spring_form).abs() <= 1e-12 * (1.0 + d.direct.abs()),
            "case {case}: direct {} vs springs {}",
            d.direct,
            d.spring_form
        );
        assert_eq!(d.positive_springs.len(), k);
        assert_eq!(d.negative_springs.len(), k * (k - 1) / 2);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "took {elapsed:.3}s, budget 1s");
    println!("[acceptance] C1 spring-decomposition identity: PASS (1000 stars, {elapsed:.3}s)");
}

#[test]
fn c2_quadratic_solve_matches_gradient_descent_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let inst = common::random_instance(&mut rng, 2, 12, 60, 4);
        let dim = inst.emb0.dim();
        let owners = inst.part.owners().to_vec();
        let sys = optimizer::assemble_system(&inst.graph, &inst.data, &inst.part).unwrap();
        let (solved, ridged) =
            optimizer::solve_embedding(&sys, &inst.emb0, &SolverConfig::default()).unwrap();
        assert!(!ridged, "round-robin partitions load every vertex");

        let e_solve =
            common::oracle_total_energy(&inst.graph, solved.as_slice(), dim, &inst.data, &owners);
        let x_gd = common::oracle_gd_minimize(
            &inst.graph,
            &inst.data,
            &owners,
            inst.emb0.as_slice(),
            dim,
        );
        let e_gd = common::oracle_total_energy(&inst.graph, &x_gd, dim, &inst.data, &owners);
        let rel = (e_solve - e_gd).abs() / (1.0 + e_gd.abs());
        worst = worst.max(rel);
        assert!(rel <= 1e-6, "case {case}: solve {e_solve} vs oracle {e_gd}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.3}s, budget 10s");
    println!(
        "[acceptance] C2 solve vs gradient-descent oracle: PASS (50 instances, worst rel {worst:.2e}, {elapsed:.3}s)"
    );
}

#[test]
fn c3_assembled_system_matches_finite_difference_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        let inst = common::random_instance(&mut rng, 5, 5, 25, 3);
        let dim = inst.emb0.dim();
        let n = inst.graph.vertex_count();
        let sys = optimizer::assemble_system(&inst.graph, &inst.data, &inst.part).unwrap();

        // Gradient from the normal equations: 2 (A phi - B), column-wise.
        let mut g_asm = vec![0.0; n * dim];
        for c in 0..dim {
            let col: Vec<f64> = (0..n).map(|r| inst.emb0.row(r)[c]).collect();
            let mut a_col = vec![0.0; n];
            sys.matrix.matvec(&col, &mut a_col);
            for r in 0..n {
                g_asm[r * dim + c] = 2.0 * (a_col[r] - sys.rhs[r * dim + c]);
            }
        }

        // Central differences of the total energy at fixed partition.
        let energy_at = |flat: &[f64]| {
            let emb = Embedding::from_flat(n, dim, flat.to_vec()).unwrap();
            energy::total_energy(&inst.graph, &emb, &inst.data, &inst.part).unwrap()
        };
        let base = inst.emb0.as_slice().to_vec();
        let mut g_fd = vec![0.0; n * dim];
        for i in 0..n * dim {
            let h = 1e-4 * (1.0 + base[i].abs());
            let mut plus = base.clone();
            plus[i] += h;
            let mut minus = base.clone();
            minus[i] -= h;
            g_fd[i] = (energy_at(&plus) - energy_at(&minus)) / (2.0 * h);
        }

        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = g_fd.iter().zip(&g_asm).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / (1.0 + norm(&g_fd));
        worst = worst.max(rel);
        assert!(rel <= 1e-6, "case {case}: gradient mismatch {rel:.3e}");
    }
    println!(
        "[acceptance] C3 assembly vs finite-difference gradient: PASS (10 instances, worst rel {worst:.2e})"
    );
}

#[test]
fn c4_zero_moduli_fit_is_lloyds_algorithm() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..20 {
        let n = rng.random_range(2..=6usize);
        let dim = rng.random_range(1..=3usize);
        let points = rng.random_range(5..=40usize);
        let edges: Vec<Edge> = (0..n - 1).map(|i| Edge::new(i, i + 1, 0.0)).collect();
        let graph = ElasticGraph::new(n, edges, vec![])
            .unwrap()
            .with_primitive_stars(0.0)
            .unwrap();
        let coords: Vec<f64> = (0..points * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let weights: Vec<f64> = (0..points).map(|_| rng.random_range(0.5..2.0)).collect();
        let data = DataSet::from_flat(points, dim, coords, Some(weights)).unwrap();
        let init: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();

        let mut emb = Embedding::from_flat(n, dim, init.clone()).unwrap();
        let mut centroids = init;
        let one_iteration = SolverConfig {
            epsilon: 1e-300,
            max_iterations: 1,
            ..SolverConfig::default()
        };
        for step in 0..5 {
            let impl_owners = optimizer::partition_data(&emb, &data).unwrap();
            let oracle_owners = common::lloyd_step(&mut centroids, dim, &data);
            assert_eq!(
                impl_owners.owners(),
                &oracle_owners[..],
                "case {case} step {step}: owners diverge"
            );
            let (next, _, _) = optimizer::fit(&graph, &data, &emb, &one_iteration).unwrap();
            emb = next;
            for (i, (a, b)) in emb.as_slice().iter().zip(&centroids).enumerate() {
                assert_eq!(
                    a.to_bits(),
                    b.to_bits(),
                    "case {case} step {step}: centroid coordinate {i}: {a} vs {b}"
                );
            }
        }
    }
    println!("[acceptance] C4 zero-moduli fit is Lloyd's k-means: PASS (20 instances, 5 iterations each, bitwise)");
}

#[test]
fn c5_energy_traces_are_monotone() {
    let tol = |e0: f64| 1e-9 * (1.0 + e0.abs());

    // Splitting-algorithm trace on iris from the PCA segment.
    let data = datasets::iris().unwrap();
    let (emb0, _) = optimizer::pca_initialize(&data).unwrap();
    let (_, _, report) = optimizer::fit(&p2(0.01), &data, &emb0, &SolverConfig::default()).unwrap();
    let e0 = report.trace[0].total();
    for w in report.trace.windows(2) {
        assert!(w[1].total() <= w[0].total() + tol(e0), "fit trace rose");
    }

    // Accepted-step energies of growth on the branching distribution.
    let data = datasets::branching2d(100, 0.05, 5);
    let (emb0, _) = optimizer::pca_initialize(&data).unwrap();
    let config = GrowthConfig {
        max_transformations: 15,
        ..GrowthConfig::default()
    };
    let (_, _, fit_report) = optimizer::fit(&p2(0.01), &data, &emb0, &config.solver).unwrap();
    let initial = fit_report.trace.last().unwrap().total();
    let (_, _, growth) = grammar::grow(&p2(config.lambda), &emb0, &data, &config).unwrap();
    assert_eq!(growth.steps.len(), 15);
    let mut prev = initial;
    for s in &growth.steps {
        assert!(
            s.energy.total() <= prev + tol(initial),
            "accepted step {} rose from {prev} to {}",
            s.step,
            s.energy.total()
        );
        prev = s.energy.total();
    }
    println!("[acceptance] C5 monotone descent (fit trace and accepted growth steps): PASS");
}

#[test]
fn c6_branching_distribution_grows_a_tree() {
    let start = Instant::now();
    let data = datasets::branching2d(200, 0.05, 42);
    let (emb0, _) = optimizer::pca_initialize(&data).unwrap();

    // Baseline: the fitted two-vertex segment.
    let config = GrowthConfig {
        max_transformations: 50,
        ..GrowthConfig::default()
    };
    let (_, _, base_report) =
        optimizer::fit(&p2(config.lambda), &data, &emb0, &config.solver).unwrap();
    let base = base_report.trace.last().unwrap().approximation;

    let (graph, _, report) = grammar::grow(&p2(config.lambda), &emb0, &data, &config).unwrap();
    assert_eq!(graph.vertex_count(), 52);
    assert!(graph.is_connected());
    assert_eq!(graph.edges().len(), 51, "a tree has n - 1 edges");
    let max_degree = graph.degrees().into_iter().max().unwrap();
    assert!(max_degree >= 3, "no branch vertex emerged");
    let final_approx = report.final_energy.approximation;
    assert!(
        final_approx <= 0.1 * base,
        "approximation energy only fell {base} -> {final_approx}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.3}s, budget 30s");
    println!(
        "[acceptance] C6 branching distribution: PASS (degree {max_degree} vertex, approx {base:.3} -> {final_approx:.3}, {elapsed:.3}s)"
    );
}

#[test]
fn c7_iris_tree_run_end_to_end() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("iris.graph.json");
    let report_path = dir.path().join("iris.report.jsonl");
    let svg_path = dir.path().join("iris.svg");
    let proj_path = dir.path().join("iris.proj.csv");
    let config = RunConfig {
        mode: Mode::Tree,
        steps: 50,
        out_graph: Some(graph_path.clone()),
        out_report: Some(report_path.clone()),
        out_svg: Some(svg_path.clone()),
        out_proj: Some(proj_path.clone()),
        ..RunConfig::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/iris.csv"))
    };
    let summary = run(&config).unwrap();
    assert_eq!(summary.vertices, 52);
    assert_eq!(summary.steps_taken, 50);

    let (graph, positions, _) =
        io::graph_from_json(&std::fs::read_to_string(&graph_path).unwrap()).unwrap();
    assert_eq!(graph.vertex_count(), 52);
    assert_eq!(graph.edges().len(), 51);
    assert!(graph.is_connected());
    assert_eq!(positions.unwrap().vertex_count(), 52);

    let report = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(report.lines().count(), 50);

    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<line ").count(), 51);
    assert_eq!(svg.matches("<circle ").count(), 150 + 52);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.3}s, budget 60s");
    println!("[acceptance] C7 iris 50-step tree with SVG: PASS (52 vertices, {elapsed:.3}s)");
}

#[test]
fn c8_product_energy_equals_sum_over_copies() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let g1 = common::random_instance(&mut rng, 2, 5, 10, 2).graph;
        let g2 = common::random_instance(&mut rng, 2, 5, 10, 2).graph;
        let product = ProductGraph::new(vec![g1, g2]).unwrap();
        let expanded = product.expand().unwrap();
        let dim = rng.random_range(1..=4usize);
        let coords = (0..expanded.vertex_count() * dim)
            .map(|_| rng.random_range(-3.0..3.0))
            .collect();
        let emb = Embedding::from_flat(expanded.vertex_count(), dim, coords).unwrap();

        let total = energy::graph_energy(&expanded, &emb).unwrap();
        let mut per_copy_sum = 0.0;
        for (i, factor) in product.factors().iter().enumerate() {
            for copy in product.copies_of_factor(i).unwrap() {
                let rows: Vec<Vec<f64>> = copy.iter().map(|&pv| emb.row(pv).to_vec()).collect();
                let restricted = Embedding::from_rows(&rows).unwrap();
                per_copy_sum += energy::graph_energy(factor, &restricted).unwrap();
            }
        }
        let rel = (total - per_copy_sum).abs() / (1.0 + total.abs());
        worst = worst.max(rel);
        assert!(rel <= 1e-12, "case {case}: {total} vs {per_copy_sum}");
    }
    println!(
        "[acceptance] C8 product energy equals per-copy sum: PASS (20 products, worst rel {worst:.2e})"
    );
}

fn rectangle_r5(seed: u64) -> DataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let u = rng.random_range(0.0..1.0);
            let v = rng.random_range(0.0..0.8);
            let mut row = vec![u, v, 0.0, 0.0, 0.0];
            for x in row.iter_mut() {
                *x += rng.random_range(-0.005..0.005);
            }
            row
        })
        .collect();
    DataSet::from_rows(&rows, None).unwrap()
}

fn line_in_r3(seed: u64) -> DataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = [0.8, 0.5, 0.33166247903554];
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let t = 3.0 * i as f64 / 199.0;
            let mut row = vec![t * dir[0], t * dir[1], t * dir[2]];
            for x in row.iter_mut() {
                *x += rng.random_range(-0.005..0.005);
            }
            row
        })
        .collect();
    DataSet::from_rows(&rows, None).unwrap()
}

#[test]
fn c9_adaptive_dimension() {
    // Planar data: the complex develops a second factor and beats the
    // curve model at the same vertex budget. The bending modulus is set
    // where stiffness matters: a stiff path cannot fold into a plane, a
    // two-factor complex covers it with straight rails.
    let data = rectangle_r5(909);
    let config = GrowthConfig {
        max_transformations: 7,
        factor_budget: 3,
        mu: 2.0,
        ..GrowthConfig::default()
    };
    let (model, report) = factorized::grow_complex(&data, &config).unwrap();
    assert_eq!(model.dimension(), 2, "rectangle data should develop r = 2");
    let complex_vertices = model.embedding().vertex_count();
    let complex_approx = report.final_energy.approximation;

    let (emb0, _) = optimizer::pca_initialize(&data).unwrap();
    let curve_config = GrowthConfig {
        rules: grammar::curve_rules(),
        max_transformations: complex_vertices - 2,
        ..config.clone()
    };
    let (curve_graph, _, curve_report) =
        grammar::grow(&p2(config.lambda), &emb0, &data, &curve_config).unwrap();
    assert_eq!(curve_graph.vertex_count(), complex_vertices);
    let curve_approx = curve_report.final_energy.approximation;
    assert!(
        complex_approx < curve_approx,
        "complex ({complex_approx}) should beat the equal-budget curve ({curve_approx})"
    );

    // Curve data: the new-factor move never wins; the dimension stays 1.
    let data = line_in_r3(910);
    let (model, report) = factorized::grow_complex(&data, &config).unwrap();
    assert_eq!(model.dimension(), 1, "curve data should stay r = 1");
    assert!(report.steps.iter().all(|s| s.rule != "new_factor"));
    println!(
        "[acceptance] C9 adaptive dimension: PASS (rectangle r=2, approx {complex_approx:.4} < curve {curve_approx:.4}; curve data stays r=1)"
    );
}

#[test]
fn c10_artifacts_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("out.graph.json");
    let report_path = dir.path().join("out.report.jsonl");
    let proj_path = dir.path().join("out.proj.csv");
    let svg_path = dir.path().join("out.svg");
    let config = RunConfig {
        mode: Mode::Tree,
        steps: 8,
        seed: 3,
        out_graph: Some(graph_path.clone()),
        out_report: Some(report_path.clone()),
        out_proj: Some(proj_path.clone()),
        out_svg: Some(svg_path.clone()),
        ..RunConfig::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/branching.csv"))
    };
    run(&config).unwrap();
    let first: Vec<Vec<u8>> = [&graph_path, &report_path, &proj_path, &svg_path]
        .iter()
        .map(|p| std::fs::read(p).unwrap())
        .collect();
    run(&config).unwrap();
    let second: Vec<Vec<u8>> = [&graph_path, &report_path, &proj_path, &svg_path]
        .iter()
        .map(|p| std::fs::read(p).unwrap())
        .collect();
    assert_eq!(first, second, "artifacts differ between identical runs");
    println!("[acceptance] C10 determinism (byte-identical artifacts): PASS");
}
