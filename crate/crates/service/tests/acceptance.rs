//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use arbiter_core::abduction::decide_with_abduction;
use arbiter_core::decimal::Decimal;
use arbiter_core::engine::acceptable_options;
use arbiter_core::explainer::replay;
use arbiter_core::grounder::{ground_theory, QueryContext};
use arbiter_core::rule_lang::{parse_theory, render_theory, tokenize, Atom, Theory, Tok};
use arbiter_core::sbp::Mode;
use arbiter_core::{evaluate, DecisionResult, Explanation};
use arbiter_oracle::random::random_case;
use arbiter_oracle::{brute_force_acceptable, MAX_GROUND_RULES};
use arbiter_service::api::router;
use arbiter_service::registry::{Registry, RegisterRequest};
use arbiter_service::source::{compile_source, SourceKind};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

const BASIC: &str = include_str!("../../core/fixtures/salary_basic.grg");
const ADVANCED: &str = include_str!("../../core/fixtures/salary_advanced.grg");
const POLICY: &str = include_str!("../../core/fixtures/salary.sbp");

type Outcome = Result<String, String>;

/// Offered, expected, yearly increase, expected option, sole deciding rule.
type SalaryCase = (i64, i64, Option<&'static str>, &'static str, Option<&'static str>);

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn options(r: &DecisionResult) -> Vec<&str> {
    r.acceptable_options.iter().map(String::as_str).collect()
}

fn decision_schemas(r: &DecisionResult, option: &str) -> Vec<String> {
    r.per_option.get(option).into_iter().flatten().flat_map(|e| e.decision_rules.iter().map(|d| d.schema.clone())).collect()
}

fn salary(o: i64, e: i64, x: Option<&str>) -> QueryContext {
    let ctx = QueryContext::new()
        .with_binding("offered_salary", Decimal::from_i64(o))
        .with_binding("expected_salary", Decimal::from_i64(e));
    match x {
        Some(x) => ctx.with_binding("yearly_salary_increase", x.parse().unwrap()),
        None => ctx,
    }
}

fn salary_advanced(replayed: &mut Vec<(Explanation, Theory)>) -> Outcome {
    let theory = parse_theory(ADVANCED).map_err(|e| e.to_string())?;
    let cases: [SalaryCase; 6] = [
        (100000, 80000, None, "accept", None),
        (50000, 80000, None, "refuse", None),
        (70000, 80000, None, "refuse", None),
        (70000, 80000, Some("0.5"), "accept", None),
        (56000, 80000, None, "refuse", Some("r2")),
        (80000, 80000, None, "accept", Some("r1")),
    ];
    let start = Instant::now();
    let mut results = Vec::new();
    for (o, e, x, _, _) in &cases {
        results.push(evaluate(&theory, &salary(*o, *e, *x)).map_err(|e| e.to_string())?);
    }
    let elapsed = start.elapsed();
    for ((o, e, x, want, only), r) in cases.iter().zip(&results) {
        check(options(r) == [*want], || format!("O={o} E={e} X={x:?}: got {:?}", options(r)))?;
        if let Some(rule) = only {
            let used = decision_schemas(r, want);
            check(used == [*rule], || format!("O={o} E={e}: decided via {used:?}, expected only {rule}"))?;
        }
        for e in r.per_option.values().flatten() {
            replayed.push((e.clone(), theory.clone()));
        }
    }
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("6/6 exact in {elapsed:?}"))
}

fn salary_basic(replayed: &mut Vec<(Explanation, Theory)>) -> Outcome {
    let theory = parse_theory(BASIC).map_err(|e| e.to_string())?;
    let above = "the_salary_offered_is_above_the_expected_salary";
    let low = "the_offered_salary_is_low";
    let close = "the_offered_salary_is_close_to_the_expected_salary";
    let plan = "the_yearly_salary_increase_plan_brings_within_two_years_the_salary_well_above_the_expected_salary";
    let cases: [(&[&str], &str); 4] =
        [(&[above], "accept"), (&[low], "refuse"), (&[close], "refuse"), (&[close, plan], "accept")];
    for (facts, want) in cases {
        let ctx = facts.iter().fold(QueryContext::new(), |c, f| c.with_fact(f));
        let r = evaluate(&theory, &ctx).map_err(|e| e.to_string())?;
        check(options(&r) == [want], || format!("{facts:?}: got {:?}", options(&r)))?;
        for e in r.per_option.values().flatten() {
            replayed.push((e.clone(), theory.clone()));
        }
    }
    Ok("4/4 exact".into())
}

/// Token stream with every rule label replaced by its definition index.
fn canonical_tokens(text: &str) -> Result<Vec<Tok>, String> {
    let theory = parse_theory(text).map_err(|e| e.to_string())?;
    let index: HashMap<&str, usize> = theory.rules().iter().enumerate().map(|(i, r)| (r.label.as_str(), i)).collect();
    let toks = tokenize(text).map_err(|e| e.to_string())?;
    Ok(toks
        .into_iter()
        .map(|s| match s.tok {
            Tok::Ident(name) => match index.get(name.as_str()) {
                Some(i) => Tok::Ident(format!("#label{i}")),
                None => Tok::Ident(name),
            },
            t => t,
        })
        .collect())
}

fn compiler_golden() -> Outcome {
    for (mode, fixture) in [(Mode::Basic, BASIC), (Mode::Advanced, ADVANCED)] {
        let compiled = compile_source(SourceKind::Sbp, POLICY, mode).map_err(|d| format!("{mode:?}: {d:?}"))?;
        let ours = canonical_tokens(&render_theory(&compiled.theory))?;
        let theirs = canonical_tokens(fixture)?;
        check(ours == theirs, || format!("{mode:?} differs:\n{}", render_theory(&compiled.theory)))?;
    }
    Ok("basic and advanced token-equal to the fixtures".into())
}

fn oracle_equivalence(replayed: &mut Vec<(Explanation, Theory)>) -> Outcome {
    let start = Instant::now();
    let mut compared = 0;
    let mut seed = 0u64;
    while compared < 1000 {
        let case = random_case(&mut ChaCha8Rng::seed_from_u64(seed), 8);
        seed += 1;
        let ground = ground_theory(&case.theory, &case.context).map_err(|e| e.to_string())?;
        if ground.len() > MAX_GROUND_RULES {
            continue;
        }
        let oracle = brute_force_acceptable(&ground, &case.theory).map_err(|e| e.to_string())?;
        let engine = acceptable_options(&ground, &case.theory);
        check(engine.acceptable_options == oracle.acceptable_options, || {
            format!("seed {}: engine {:?} oracle {:?}\n{}", seed - 1, engine.acceptable_options, oracle.acceptable_options, case.source)
        })?;
        let result = evaluate(&case.theory, &case.context).map_err(|e| e.to_string())?;
        for e in result.per_option.values().flatten() {
            replayed.push((e.clone(), case.theory.clone()));
        }
        compared += 1;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{compared}/{compared} instances agree in {elapsed:?}"))
}

fn replay_all(replayed: &[(Explanation, Theory)]) -> Outcome {
    let failed: Vec<&Explanation> = replayed.iter().filter(|(e, t)| !replay(e, t)).map(|(e, _)| e).collect();
    check(!replayed.is_empty(), || "no explanations collected".into())?;
    check(failed.is_empty(), || format!("{} of {} failed, first: {:?}", failed.len(), replayed.len(), failed[0]))?;
    Ok(format!("{0}/{0} explanations replay", replayed.len()))
}

fn abduction() -> Outcome {
    let src = "rule(r1,refuse,[a1,a2]).\nrule(r2,refuse,[a3]).\nrule(r3,accept,[]):-offer_made.\n\
               rule(r4,refuse,[a2,a3]).\nrule(p1,prefer(r3,r2),[]).\nrule(p2,prefer(r4,r3),[]).\n\
               complement(accept,refuse).\nabducible(a1).\nabducible(a2).\nabducible(a3).";
    let theory = parse_theory(src).map_err(|e| e.to_string())?;
    let ctx = QueryContext::new().with_fact("offer_made");
    let abducibles = ["a1", "a2", "a3"];
    for target in ["accept", "refuse"] {
        let mut supporting: Vec<BTreeSet<Atom>> = Vec::new();
        for mask in 0u32..8 {
            let set: BTreeSet<Atom> =
                abducibles.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| Atom::prop(*a)).collect();
            let assumed = set.iter().cloned().fold(ctx.clone(), QueryContext::with_assumed);
            let r = evaluate(&theory, &assumed).map_err(|e| e.to_string())?;
            if r.acceptable_options.contains(target) {
                supporting.push(set);
            }
        }
        let minimal: BTreeSet<BTreeSet<Atom>> = supporting
            .iter()
            .filter(|s| !supporting.iter().any(|t| t != *s && t.is_subset(s)))
            .cloned()
            .collect();
        let found = decide_with_abduction(&theory, &ctx, target).map_err(|e| e.to_string())?;
        let found: BTreeSet<BTreeSet<Atom>> = found.into_iter().map(|s| s.assumptions.into_iter().collect()).collect();
        check(found == minimal, || format!("{target}: found {found:?}, exhaustive {minimal:?}"))?;
    }
    Ok("minimal supports match exhaustive search for both options".into())
}

fn round_trip() -> Outcome {
    let mut sources: Vec<String> = vec![BASIC.into(), ADVANCED.into()];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    sources.extend((0..100).map(|_| random_case(&mut rng, 8).source));
    for src in &sources {
        let theory = parse_theory(src).map_err(|e| e.to_string())?;
        let again = parse_theory(&render_theory(&theory)).map_err(|e| e.to_string())?;
        check(again == theory, || format!("mismatch after round trip:\n{src}"))?;
    }
    Ok(format!("{} theories identical after parse(render(..))", sources.len()))
}

fn scale_theory() -> String {
    let mut src = String::new();
    let options = 50;
    for i in 0..500 {
        let o = i % options;
        let threshold = (i * 37) % 1000;
        let cond = match i % 3 {
            0 => format!("score(S),S>{threshold}"),
            1 => format!("score(S),budget(B),S+B>{threshold}"),
            _ => format!("flag{}", i % 10),
        };
        src.push_str(&format!("rule(r{i},o{o},[]):-{cond}.\n"));
    }
    for k in 0..75 {
        let a = k * 6;
        let b = a + 1;
        src.push_str(&format!("rule(p{},prefer(r{a},r{b}),[]):-score(S),S>{}.\n", 2 * k, k * 10));
        src.push_str(&format!("rule(p{},prefer(r{b},r{a}),[]):-flag{}.\n", 2 * k + 1, k % 10));
    }
    for k in 0..20 {
        src.push_str(&format!("rule(c{k},prefer(p{},p{}),[]):-budget(B),B>{}.\n", 2 * k, 2 * k + 1, k * 5));
    }
    for a in 0..options {
        for b in a + 1..options {
            src.push_str(&format!("complement(o{a},o{b}).\n"));
        }
    }
    src
}

fn scale() -> Outcome {
    let theory = parse_theory(&scale_theory()).map_err(|e| e.to_string())?;
    let ctx = (0..10)
        .step_by(2)
        .fold(QueryContext::new(), |c, i| c.with_fact(&format!("flag{i}")))
        .with_binding("score", Decimal::from_i64(640))
        .with_binding("budget", Decimal::from_i64(60));
    let start = Instant::now();
    let r = evaluate(&theory, &ctx).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(!r.acceptable_options.is_empty(), || "no acceptable option".into())?;
    let cited: BTreeSet<usize> = r.per_option.values().flatten().flat_map(|e| e.priority_rules.iter().map(|p| p.level)).collect();
    check(cited.contains(&1) && cited.contains(&2), || format!("priority levels cited: {cited:?}"))?;
    check(elapsed < Duration::from_secs(2), || format!("took {elapsed:?}"))?;
    Ok(format!("50 options, 500+150+20 rules: {} acceptable in {elapsed:?}", r.acceptable_options.len()))
}

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn api_contract() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let reg = Registry::open(dir.path()).map_err(|e| e.to_string())?;
    for (id, mode) in [("salary", Mode::Advanced), ("salary-basic", Mode::Basic)] {
        reg.register(id, RegisterRequest { policy: Some(POLICY.into()), mode: Some(mode), ..Default::default() })
            .map_err(|e| e.to_string())?;
    }
    let app = router(Arc::new(reg));

    let (status, meta) = call(&app, Method::GET, "/applications/salary/metadata", None).await;
    check(status == StatusCode::OK, || format!("metadata status {status}"))?;
    check(meta["options"] == json!(["accept", "refuse"]), || format!("options {}", meta["options"]))?;
    let elements: BTreeMap<String, String> = meta["scenario_elements"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|e| (e["id"].as_str().unwrap_or_default().to_string(), e["kind"].as_str().unwrap_or_default().to_string()))
        .collect();
    let want: BTreeMap<String, String> = ["offered_salary", "expected_salary", "yearly_salary_increase"]
        .iter()
        .map(|id| (id.to_string(), "numeric".to_string()))
        .collect();
    check(elements == want, || format!("advanced elements {elements:?}"))?;

    let (_, meta) = call(&app, Method::GET, "/applications/salary-basic/metadata", None).await;
    let kinds: Vec<&str> = meta["scenario_elements"].as_array().into_iter().flatten().filter_map(|e| e["kind"].as_str()).collect();
    check(kinds == ["propositional"; 4], || format!("basic elements {}", meta["scenario_elements"]))?;

    let q = json!({ "bindings": { "offered_salary": 70000, "expected_salary": 80000, "yearly_salary_increase": 0.5 } });
    let (status, body) = call(&app, Method::POST, "/applications/salary/query", Some(q.clone())).await;
    check(status == StatusCode::OK, || format!("query status {status}: {body}"))?;
    check(body["acceptable_options"] == json!(["accept"]) && body["ambiguous"] == json!(false), || body.to_string())?;
    let expl = &body["explanations"][0];
    let chain: Vec<&str> =
        expl["priority_rules"].as_array().into_iter().flatten().filter_map(|r| r["schema"].as_str()).collect();
    check(expl["decision_rules"][0]["schema"] == "r4" && chain == ["p2", "c1"], || expl.to_string())?;
    let (_, again) = call(&app, Method::POST, "/applications/salary/query", Some(q)).await;
    check(again == body, || "identical bodies gave different responses".into())?;

    let low = json!({ "facts": ["the_offered_salary_is_low"] });
    let (status, body) = call(&app, Method::POST, "/applications/salary-basic/query", Some(low)).await;
    check(status == StatusCode::OK && body["acceptable_options"] == json!(["refuse"]), || body.to_string())?;

    let (status, _) = call(&app, Method::GET, "/applications/unknown/metadata", None).await;
    check(status == StatusCode::NOT_FOUND, || format!("unknown metadata gave {status}"))?;
    let (status, _) = call(&app, Method::POST, "/applications/unknown/query", Some(json!({}))).await;
    check(status == StatusCode::NOT_FOUND, || format!("unknown query gave {status}"))?;
    let bad = json!({ "facts": ["nonexistent_atom"] });
    let (status, _) = call(&app, Method::POST, "/applications/salary-basic/query", Some(bad)).await;
    check(status == StatusCode::UNPROCESSABLE_ENTITY, || format!("unknown element gave {status}"))?;
    Ok("metadata, query, 404 and 422 as specified".into())
}

fn main() -> ExitCode {
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let mut replayed = Vec::new();
    let outcomes: Vec<(&str, Outcome)> = vec![
        ("salary advanced suite", salary_advanced(&mut replayed)),
        ("salary basic suite", salary_basic(&mut replayed)),
        ("compiler golden", compiler_golden()),
        ("oracle equivalence", oracle_equivalence(&mut replayed)),
        ("explanation replay", replay_all(&replayed)),
        ("abduction minimal supports", abduction()),
        ("round trip", round_trip()),
        ("scale envelope", scale()),
        ("api contract", runtime.block_on(api_contract())),
    ];
    let mut failed = 0;
    for (name, outcome) in &outcomes {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
