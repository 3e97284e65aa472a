//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.
//!
//!     cargo test --test acceptance

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use camsearch::agents::{run_batch, task_ids, AgentConfig, AgentKind};
use camsearch::env::EnvConfig;
use camsearch::fixture::{factory_small_tasks, SHIPPED_PATH};
use camsearch::metrics::{auc_crr_trace, sr_at, track_report, tws, tws_term, Outcome};
use camsearch::schema::AttrValue;
use camsearch::sttg::zones::components;
use camsearch::sttg::{
    build_sttg, build_zones, classify_feasibility, BuildConfig, EdgeStats, EdgeType, ImpossibleReason, Sttg, Verdict,
};
use camsearch::taskgen::{GenConfig, StepKind, TaskSet};
use camsearch::topology::PairSet;
use camsearch::witness::{fill_template, parse_witness_response, templates, ParsedAnswer, K3};
use camsearch::world::{camera_ids, load_world, Trajectory, Visit};
use camsearch::{AttributeSchema, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("{what} took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

fn oracle_parity() -> Check {
    let start = Instant::now();
    let b = standard_batch();
    let ts = run_batch(&b.set, &task_ids(&b.set, None), &AgentConfig::new(AgentKind::Oracle), &EnvConfig::default())
        .map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for track in 1..=3u8 {
        let mine: Vec<_> = ts.iter().filter(|t| t.track == track).cloned().collect();
        ensure(mine.len() >= 500, || format!("track {track}: only {} tasks", mine.len()))?;
        let r = track_report(track, &mine).map_err(|e| e.to_string())?;
        ensure(r.tws == 1.0 && r.top1 == 1.0 && r.sr[4] == 1.0, || {
            format!("track {track}: TWS {} Top-1 {} SR@5 {}", r.tws, r.top1, r.sr[4])
        })?;
        parts.push(format!("T{track} n={}", r.n));
    }
    within(start, Duration::from_secs(60), "oracle parity")?;
    Ok(format!("{} TWS 1.000 Top-1 100.0 SR@5 100.0, {:.1}s", parts.join(" "), start.elapsed().as_secs_f64()))
}

fn shipped() -> Result<(camsearch::World, Sttg, TaskSet), String> {
    let world = load_world(crate_path(SHIPPED_PATH)).map_err(|e| e.to_string())?;
    let (sttg, _) = build_sttg(&world, &Topology::factory(), &BuildConfig::default()).map_err(|e| e.to_string())?;
    let tasks = factory_small_tasks(&world, &sttg);
    let set = TaskSet::new(&world, Some(&sttg), GenConfig::default().seed, tasks);
    Ok((world, sttg, set))
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn track3_fixture() -> Check {
    let (_, sttg, set) = shipped()?;
    let e = sttg.edge("c05", "c08").ok_or("no c05->c08 edge")?;
    let stats = (round1(e.t_min), round1(e.t_med), round1(e.t_max));
    ensure(stats == (7.6, 11.2, 20.7) && e.n == 189, || format!("c05->c08 {stats:?} n={}", e.n))?;
    let task = set.tasks.iter().find(|t| t.track == 3).ok_or("no track 3 task")?;
    let step = task
        .oracle_path
        .iter()
        .find(|s| s.kind == StepKind::Temporal)
        .ok_or("no temporal step")?;
    ensure(step.candidates_before == 15 && step.candidates_after == 5, || {
        format!("temporal step {} -> {}", step.candidates_before, step.candidates_after)
    })?;
    let info = task.track3.as_ref().ok_or("no track 3 info")?;
    let mut reasons: BTreeMap<ImpossibleReason, usize> = BTreeMap::new();
    for v in info.verdicts.values() {
        if let Verdict::Impossible(r) = v {
            *reasons.entry(*r).or_default() += 1;
        }
    }
    let want = BTreeMap::from([
        (ImpossibleReason::NotPresent, 4),
        (ImpossibleReason::TimeReversal, 5),
        (ImpossibleReason::TooSlow, 1),
    ]);
    ensure(reasons == want, || format!("reasons {reasons:?}"))?;
    let ts = run_batch(&set, &[task.id.clone()], &AgentConfig::new(AgentKind::Greedy), &EnvConfig::default())
        .map_err(|e| e.to_string())?;
    let t = &ts[0];
    let term = tws_term(t.success(), t.oracle_turns, t.turns_used);
    ensure(t.success() && t.turns_used == 2 && term == 1.0, || {
        format!("greedy {:?} in {} turns, TWS {term}", t.outcome, t.turns_used)
    })?;
    Ok(format!(
        "c05->c08 7.6/11.2/20.7 n=189, T5 15 -> 5 (5 TR, 1 TS, 4 NP), greedy 2 turns TWS 1.0 ({})",
        task.id
    ))
}

fn track1_fixture() -> Check {
    let (world, _, set) = shipped()?;
    let task = set.tasks.iter().find(|t| t.track == 1).ok_or("no track 1 task")?;
    let mut chain = vec![world.gallery.len() as u32, task.initial_candidates.len() as u32];
    chain.extend(task.oracle_path.iter().map(|s| s.candidates_after));
    ensure(chain == [90, 11, 3, 1], || format!("narrowing {chain:?}"))?;
    ensure(task.final_candidates() == [task.target], || "final set is not the target".into())?;
    Ok(format!("90 -> 11 -> 3 -> 1 ({})", task.id))
}

fn random_trajectory(rng: &mut ChaCha8Rng, cams: &[String]) -> Trajectory {
    let mut visits = Vec::new();
    for _ in 0..rng.random_range(0..7) {
        let cam = cams[rng.random_range(0..cams.len())].clone();
        // Integer times make equal distances, and so ties, common.
        let enter = rng.random_range(0..400) as f64;
        let exit = enter + rng.random_range(0..30) as f64;
        visits.push(Visit::new(cam, enter, exit));
    }
    visits.sort_by(|a, b| a.enter.total_cmp(&b.enter));
    Trajectory { person: 0, visits }
}

fn random_graph(rng: &mut ChaCha8Rng, cams: &[String]) -> Sttg {
    let mut edges = Vec::new();
    for a in cams {
        for b in cams {
            if a != b && rng.random_bool(0.5) {
                let lo = rng.random_range(1.0..60.0);
                let hi = lo + rng.random_range(0.0..120.0);
                edges.push(EdgeStats::from_sample(a, b, EdgeType::Travel, &[lo, hi]));
            }
        }
    }
    edges.sort_by(|x, y| (&x.from, &x.to).cmp(&(&y.from, &y.to)));
    Sttg {
        topology_name: "random".into(),
        nodes: Vec::new(),
        edges,
        zones: Vec::new(),
        composite_zones: Vec::new(),
        zone_trees: Vec::new(),
    }
}

fn feasibility_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cams = camera_ids(4);
    let n = 20_000;
    let mut seen: BTreeSet<Verdict> = BTreeSet::new();
    let mut graph = random_graph(&mut rng, &cams);
    for i in 0..n {
        if i % 100 == 0 {
            graph = random_graph(&mut rng, &cams);
        }
        let cand = random_trajectory(&mut rng, &cams);
        let c1 = &cams[rng.random_range(0..cams.len())];
        let c2 = &cams[rng.random_range(0..cams.len())];
        let gap = rng.random_range(-40..300) as f64;
        let margin = if rng.random_bool(0.8) { 2.0 } else { rng.random_range(1.0..3.0) };
        let got = classify_feasibility(&cand, c1, c2, gap, &graph, margin).verdict;
        let want = reference_verdict(&cand, c1, c2, gap, &graph.edges, margin);
        ensure(got == want, || format!("case {i}: {got:?} != {want:?} for {cand:?} {c1}->{c2} gap {gap}"))?;
        seen.insert(got);
    }
    within(start, Duration::from_secs(5), "feasibility check")?;
    ensure(seen.len() == 6, || format!("only {} verdict kinds exercised", seen.len()))?;
    Ok(format!("{n} cases, 0 mismatches, all 6 verdicts, {:.2}s", start.elapsed().as_secs_f64()))
}

fn random_pairs(rng: &mut ChaCha8Rng, cams: &[String], p: f64) -> PairSet {
    let mut s = PairSet::new();
    for (i, a) in cams.iter().enumerate() {
        for b in &cams[i + 1..] {
            if rng.random_bool(p) {
                s.insert((a.clone(), b.clone()));
            }
        }
    }
    s
}

fn zoning_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let cams = camera_ids(rng.random_range(1..25));
        let density = rng.random_range(0.0..0.3);
        let overlap = random_pairs(&mut rng, &cams, density);
        let soft = random_pairs(&mut rng, &cams, density);
        let got: BTreeSet<BTreeSet<String>> =
            components(&cams, &overlap).into_iter().map(|c| c.into_iter().collect()).collect();
        let want = bfs_components(&cams, &overlap);
        ensure(got == want, || format!("topology {i}: components differ"))?;
        let (atomic, composite) = build_zones(&cams, &overlap, &soft, &[], &[]);
        let atomic: BTreeSet<BTreeSet<String>> = atomic.into_iter().map(|z| z.cameras).collect();
        ensure(atomic == want, || format!("topology {i}: atomic zones differ"))?;
        let both: PairSet = overlap.union(&soft).cloned().collect();
        let want_c: BTreeSet<BTreeSet<String>> = bfs_components(&cams, &both)
            .into_iter()
            .filter(|g| want.iter().filter(|z| !z.is_disjoint(g)).count() >= 2)
            .collect();
        let got_c: BTreeSet<BTreeSet<String>> = composite.into_iter().map(|z| z.cameras).collect();
        ensure(got_c == want_c, || format!("topology {i}: composite zones differ"))?;
    }
    let f = Topology::factory();
    let (fz, _) = build_zones(&f.camera_ids(), &f.overlap_set(), &f.soft_set(), &f.zones, &f.composite_zones);
    let wh = fz.iter().find(|z| z.id == "F_WAREHOUSE").ok_or("no F_WAREHOUSE")?;
    let wh_cams: Vec<&str> = wh.cameras.iter().map(String::as_str).collect();
    ensure(fz.len() == 9 && wh_cams == ["c01", "c02", "c04", "c05"], || {
        format!("factory {} zones, F_WAREHOUSE {wh_cams:?}", fz.len())
    })?;
    let u = Topology::university();
    let (uz, _) = build_zones(&u.camera_ids(), &u.overlap_set(), &u.soft_set(), &u.zones, &u.composite_zones);
    ensure(uz.len() == 6, || format!("university {} zones", uz.len()))?;
    Ok("1000 random topologies, 0 mismatches; factory 9 zones, F_WAREHOUSE = {c01,c02,c04,c05}; university 6".into())
}

fn generation_guarantees() -> Check {
    let b = standard_batch();
    let merged = merged_trajectories(&b.world);
    let margin = GenConfig::default().margin;
    let mut counts = [0usize; 3];
    for task in &b.set.tasks {
        let fin = replay(task, &b.world, &b.sttg, &merged, margin).map_err(|e| format!("{}: {e}", task.id))?;
        ensure(fin == BTreeSet::from([task.target]), || format!("{}: replay leaves {fin:?}", task.id))?;
        ensure(task.final_candidates() == [task.target], || format!("{}: recorded path not unique", task.id))?;
        match task.track {
            2 => ensure(task.spatial_turns() >= 1, || format!("{}: no spatial step", task.id))?,
            3 => {
                let v = &task.track3.as_ref().ok_or("track 3 info missing")?.verdicts;
                ensure(
                    v.values().any(|v| {
                        matches!(
                            v,
                            Verdict::Impossible(ImpossibleReason::TimeReversal | ImpossibleReason::TooSlow)
                        )
                    }),
                    || format!("{}: no TIME_REVERSAL or TOO_SLOW verdict", task.id),
                )?;
            }
            _ => {}
        }
        counts[task.track as usize - 1] += 1;
    }
    let total: usize = counts.iter().sum();
    ensure(total >= 1000, || format!("only {total} tasks"))?;
    Ok(format!("{total} tasks (T1 {} T2 {} T3 {}), all unique on independent replay", counts[0], counts[1], counts[2]))
}

fn metric_suite() -> Check {
    for (tau_star, tau, want) in [(2, 2, 1.0), (2, 4, 0.5), (2, 1, 1.0)] {
        let got = tws_term(true, tau_star, tau);
        ensure(got == want, || format!("TWS({tau_star},{tau}) = {got}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let batch: Vec<_> = (0..200)
        .map(|i| {
            let outcome = [Outcome::Correct, Outcome::Wrong, Outcome::Timeout][rng.random_range(0..3)];
            transcript(&format!("t{i}"), 2, outcome, rng.random_range(0..21), rng.random_range(1..6), vec![10])
        })
        .collect();
    let mut prev = 0.0;
    for t in 1..=20 {
        let sr = sr_at(&batch, t).map_err(|e| e.to_string())?;
        ensure(sr >= prev, || format!("SR@{t} = {sr} < SR@{} = {prev}", t - 1))?;
        prev = sr;
    }
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c0 = rng.random_range(1..200u32);
        let mut trace = vec![c0];
        for _ in 0..rng.random_range(0..12) {
            let last = *trace.last().unwrap();
            trace.push(rng.random_range(0..=last));
        }
        let tau = rng.random_range(0..15);
        worst = worst.max((auc_crr_trace(&trace, tau) - brute_auc(&trace, tau)).abs());
    }
    ensure(worst <= 1e-12, || format!("AUC-CRR off by {worst:e}"))?;
    ensure(tws(&batch) <= 1.0, || "TWS above 1".into())?;
    Ok(format!("TWS cases exact, SR@1..20 monotone, AUC-CRR max error {worst:e} on 100 traces"))
}

fn ablation() -> Check {
    let start = Instant::now();
    let b = standard_batch();
    let ids: Vec<String> = (1..=3u8)
        .flat_map(|t| task_ids(&b.set, Some(t)).into_iter().take(200))
        .collect();
    let env = EnvConfig::default();
    let run = |cfg: &AgentConfig| run_batch(&b.set, &ids, cfg, &env).map_err(|e| e.to_string());
    let greedy = run(&AgentConfig::new(AgentKind::Greedy))?;
    let random = run(&AgentConfig::new(AgentKind::RandomOrder))?;
    let mut no_t = AgentConfig::new(AgentKind::Greedy);
    no_t.temporal_first = false;
    let no_temporal = run(&no_t)?;
    let top1 = |ts: &[camsearch::metrics::Transcript]| {
        let t3: Vec<_> = ts.iter().filter(|t| t.track == 3).collect();
        t3.iter().filter(|t| t.success()).count() as f64 / t3.len() as f64
    };
    let (g, r) = (tws(&greedy), tws(&random));
    let (on, off) = (top1(&greedy), top1(&no_temporal));
    let detail = format!(
        "greedy TWS {g:.3} vs random {r:.3}; track 3 Top-1 without T5 {:.1}% vs {:.1}% (need < {:.1}%), {:.1}s",
        off * 100.0,
        on * 100.0,
        on * 40.0,
        start.elapsed().as_secs_f64()
    );
    ensure(g > r && off < 0.4 * on, || detail.clone())?;
    within(start, Duration::from_secs(120), "ablation")?;
    Ok(detail)
}

fn interpreter_round_trip() -> Check {
    let schema = AttributeSchema::default_schema();
    let mut n = 0;
    for attr in K3 {
        let def = schema.get(attr).ok_or("missing K3 attribute")?;
        for v in def.values.iter().filter(|v| v.as_str() != camsearch::schema::UNCERTAIN) {
            let want = if def.multi_select {
                AttrValue::multi([v.clone()])
            } else {
                AttrValue::single(v.clone())
            };
            for t in templates() {
                let text = fill_template(t, v);
                let got = parse_witness_response(&text, attr, &schema);
                ensure(got == ParsedAnswer::Value(want.clone()), || format!("{text:?} -> {got:?}"))?;
                n += 1;
            }
        }
    }
    ensure(templates().len() == 12, || format!("{} templates", templates().len()))?;
    Ok(format!("{n} answers (12 templates x K3 values), 100% parsed back"))
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_camsearch"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("camsearch {args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn pipeline(dir: &Path) -> Result<(), String> {
    cli(dir, &["gen-world", "--topology", "factory", "--persons", "300", "--seed", "7", "--out", "world.json"])?;
    cli(dir, &["build-sttg", "--world", "world.json", "--out", "sttg.json", "--report", "report.json"])?;
    cli(dir, &["gen-tasks", "--track", "all", "--world", "world.json", "--sttg", "sttg.json", "--seed", "7", "--out", "tasks.json"])?;
    cli(dir, &["run", "--tasks", "tasks.json", "--agent", "greedy", "--seed", "7", "--out", "transcripts.ndjson"])?;
    cli(dir, &["score", "--transcripts", "transcripts.ndjson", "--format", "json", "--out", "score.json"])
}

const ARTIFACTS: [&str; 6] = ["world.json", "sttg.json", "report.json", "tasks.json", "transcripts.ndjson", "score.json"];

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    let mut bytes = 0;
    for f in ARTIFACTS {
        let x = std::fs::read(a.path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        let y = std::fs::read(b.path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(!x.is_empty() && x == y, || format!("{f} differs between runs"))?;
        bytes += x.len();
    }
    Ok(format!("6 artifacts, {bytes} bytes, byte-identical across two runs"))
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("oracle parity", oracle_parity),
        ("track 3 fixture regression", track3_fixture),
        ("track 1 fixture regression", track1_fixture),
        ("feasibility oracle equivalence", feasibility_equivalence),
        ("zoning equivalence", zoning_equivalence),
        ("generation guarantees", generation_guarantees),
        ("metric unit suite", metric_suite),
        ("ablation direction", ablation),
        ("interpreter round-trip", interpreter_round_trip),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match r {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
