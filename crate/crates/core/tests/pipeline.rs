use proptest::prelude::*;
use wlpower::cases::{builtin_graph, random_spec, rng_from_seed, sample_graph, sample_graph_with, SAMPLE_ALPHABET};
use wlpower::compare::{weaker, Shift};
use wlpower::graph::parse_graph;
use wlpower::mpnn::{run_mpnn, spec_from_json, spec_to_json, Family, MpnnSpec};
use wlpower::synthesis::{replay, stabilization_rounds, synthesize_gnn_minus, CertificateDto, SynthOptions};
use wlpower::wl::{wl_rounds, wl_run};
use wlpower::{ExactScalar, F64Graph, Rational, SurdGraph};

fn q(a: i64, b: i64) -> Rational {
    Rational::new(a.into(), b.into())
}

fn graph(n: usize, seed: u64) -> SurdGraph {
    sample_graph(n, &q(1, 2), seed).unwrap()
}

#[test]
fn every_family_survives_a_json_round_trip() {
    let mut rng = rng_from_seed(11);
    let g = builtin_graph("fig1").unwrap();
    for family in Family::ALL {
        let spec: MpnnSpec<ExactScalar> = random_spec(&mut rng, family, 2, 3).unwrap();
        let text = spec_to_json(&spec).unwrap();
        let back: MpnnSpec<ExactScalar> = spec_from_json(&text).unwrap();
        assert_eq!(spec_to_json(&back).unwrap(), text, "{}", family.name());
        let (a, b) = (run_mpnn(&g, &spec).unwrap(), run_mpnn(&g, &back).unwrap());
        assert_eq!(a.labellings, b.labellings, "{}", family.name());
    }
}

#[test]
fn graph_text_round_trip() {
    for id in ["fig1", "g1", "g2", "g3"] {
        let g = builtin_graph(id).unwrap();
        let back = parse_graph(&g.to_text()).unwrap();
        assert_eq!(back.labels(), g.labels());
        assert_eq!(back.edges(), g.edges());
    }
}

#[test]
fn certificate_json_parses_back() {
    let g = builtin_graph("g1").unwrap();
    let cert = synthesize_gnn_minus(&g, 2, &SynthOptions::default()).unwrap();
    let dto: CertificateDto = serde_json::from_str(&cert.to_json()).unwrap();
    assert_eq!(dto, cert.to_dto());
    assert!(dto.all_verified);
}

#[test]
fn f64_runs_agree_with_exact_runs_on_dyadic_weights() {
    // weights over denominators 1 and 2 keep every intermediate exact in f64
    let mut rng = rng_from_seed(5);
    for seed in 0..10 {
        let g = graph(7, seed);
        let gf: F64Graph = g.map_labels(|x| x.to_f64());
        assert_eq!(wl_run(&g, None).rounds, wl_run(&gf, None).rounds);
        for family in [Family::Gnn, Family::CombAggr] {
            let spec: MpnnSpec<ExactScalar> = random_spec(&mut rng, family, 3, SAMPLE_ALPHABET).unwrap();
            let spec_f: MpnnSpec<f64> = spec_from_json(&spec_to_json(&spec).unwrap()).unwrap();
            let exact = run_mpnn(&g, &spec).unwrap();
            let float = run_mpnn(&gf, &spec_f).unwrap();
            assert_eq!(exact.partitions, float.partitions);
        }
    }
}

#[test]
fn gcn_in_f64_reproduces_the_fig1_split() {
    let g = builtin_graph("fig1").unwrap();
    let gf: F64Graph = g.map_labels(|x| x.to_f64());
    let spec: MpnnSpec<f64> = wlpower::cli::load_spec("gcn", &g, 1)
        .map(|s| spec_from_json(&spec_to_json(&s).unwrap()).unwrap())
        .unwrap();
    let t = run_mpnn(&gf, &spec).unwrap();
    assert_ne!(t.partitions[1].class_of(3), t.partitions[1].class_of(4));
    assert!((t.labellings[1].row(4)[1] - 1.0 / 6f64.sqrt()).abs() < 1e-12);
}

fn connected(seed: u64, n: usize) -> SurdGraph {
    sample_graph_with(&mut rng_from_seed(seed), n, &q(2, 5), true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wl_is_permutation_equivariant(seed in 0u64..1000, n in 2usize..9, rot in 0usize..9) {
        let g = graph(n, seed);
        let perm: Vec<usize> = (0..n).map(|v| (v + rot) % n).collect();
        let h = g.permuted(&perm);
        let (a, b) = (wl_run(&g, None), wl_run(&h, None));
        prop_assert_eq!(a.stabilized_at, b.stabilized_at);
        for (pa, pb) in a.rounds.iter().zip(&b.rounds) {
            for v in 0..n {
                for w in 0..n {
                    prop_assert_eq!(pa.class_of(v) == pa.class_of(w), pb.class_of(perm[v]) == pb.class_of(perm[w]));
                }
            }
        }
    }

    #[test]
    fn synthesized_gnn_minus_replays(seed in 0u64..1000, n in 2usize..7, sign in any::<bool>()) {
        let g = connected(seed, n);
        let sigma = if sign { wlpower::mpnn::Activation::Sign } else { wlpower::mpnn::Activation::Relu };
        let opts = SynthOptions { sigma, ..SynthOptions::default() };
        let cert = synthesize_gnn_minus(&g, stabilization_rounds(&g), &opts).unwrap();
        prop_assert!(cert.all_verified());
        prop_assert!(replay(&g, &cert).unwrap());
    }

    #[test]
    fn anonymous_networks_never_outrun_wl(seed in 0u64..1000, n in 2usize..8) {
        let g = graph(n, seed);
        let mut rng = rng_from_seed(seed);
        let family = [Family::Gnn, Family::GnnMinus, Family::CombAggr][(seed % 3) as usize];
        let spec: MpnnSpec<ExactScalar> = random_spec(&mut rng, family, 3, SAMPLE_ALPHABET).unwrap();
        let m = run_mpnn(&g, &spec).unwrap();
        let wl = wl_rounds(&g, 3);
        prop_assert!(weaker(&m.partitions, &wl.rounds, Shift::Identity).unwrap().holds);
    }
}
