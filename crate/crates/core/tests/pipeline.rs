use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xsecview_core::campaign::{random_case, run_case, CampaignConfig};
use xsecview_core::content::conforms;
use xsecview_core::fixtures::{self, FIXTURES};
use xsecview_core::{
    compat_mode, derive_view_with, eval, generate, materialize, parse_dtd, parse_spec, parse_xml, parse_xpath, AccessSpec,
    DeriveOptions, GenConfig, SecurityView,
};

fn spec(name: &str) -> AccessSpec {
    let f = fixtures::get(name).unwrap();
    let s = parse_spec(f.ann, &parse_dtd(f.dtd).unwrap()).unwrap();
    if f.definition_1 {
        compat_mode(&s)
    } else {
        s
    }
}

#[test]
fn fixture_queries_agree_with_the_view() {
    for f in FIXTURES.iter().filter(|f| f.xml.is_some()) {
        let sv = SecurityView::new(spec(f.name));
        let t = parse_xml(f.xml.unwrap()).unwrap();
        let m = materialize(&t, &sv.spec);
        for (name, q) in f.queries.iter().filter(|(_, q)| !q.contains('{')) {
            let q = parse_xpath(q).unwrap();
            let want = m.to_original(&eval(&m.view, &q, 0));
            for fast in [false, true] {
                let out = sv.rewrite(&q, fast, None).unwrap();
                let got = out.query().map_or_else(Vec::new, |p| eval(&t, p, 0));
                assert_eq!(got, want, "{} {name} fast={fast}", f.name);
            }
        }
    }
}

#[test]
fn hospital_documents_agree_and_conform() {
    let sv = SecurityView::new(spec("hospital"));
    let h = fixtures::get("hospital").unwrap();
    let d = sv.spec.dtd().clone();
    for seed in 0..5 {
        let cfg = GenConfig { seed, star_p: 0.7, target_nodes: Some(3000), max_depth: 14, ..GenConfig::default() };
        let t = generate(&d, &cfg).unwrap();
        let m = materialize(&t, &sv.spec);
        assert!(conforms(&m.view, &sv.view.view).is_ok(), "seed {seed}");
        for (name, q) in h.queries {
            let q = parse_xpath(q).unwrap();
            let want = m.to_original(&eval(&m.view, &q, 0));
            let out = sv.rewrite(&q, false, None).unwrap();
            assert_eq!(eval(&t, out.query().unwrap(), 0), want, "{name} seed {seed}");
        }
    }
}

// The default view keeps conditional children required, as the worked
// examples print them; only the optional form is a schema for every instance.
#[test]
fn materialized_views_conform_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = CampaignConfig::default();
    let mut bad = 0;
    for _ in 0..1000 {
        let c = random_case(&mut rng, &cfg);
        let v = derive_view_with(&c.spec, DeriveOptions { optional_conditionals: true });
        let m = materialize(&c.tree, &c.spec);
        bad += conforms(&m.view, &v.view).is_err() as usize;
    }
    assert_eq!(bad, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_cases_close(seed in any::<u64>(), upward in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_case(&mut rng, &CampaignConfig { upward, ..CampaignConfig::default() });
        let o = run_case(&c);
        prop_assert!(o.rewrite_ok && o.fast_ok && o.acc_ok, "{}", o.detail.unwrap_or_default());
    }
}
