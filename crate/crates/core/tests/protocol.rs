mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use camsearch::agents::{make_agent, run_batch, AgentConfig, AgentKind, PlannerAgent};
use camsearch::env::EnvConfig;
use camsearch::metrics::{Outcome, Transcript};
use camsearch::protocol::{decode, encode, golden_corpus, host, run_client, Message, ProtocolError};
use camsearch::synth::{generate_world, WorldGenConfig};
use camsearch::sttg::{build_sttg, BuildConfig};
use camsearch::taskgen::{gen_track, GenConfig, TaskSet};
use camsearch::Topology;

use common::crate_path;

fn small_set() -> TaskSet {
    let world = generate_world(&WorldGenConfig::new("factory", 300, 7)).unwrap();
    let (sttg, _) = build_sttg(&world, &Topology::factory(), &BuildConfig::default()).unwrap();
    let cfg = GenConfig::default();
    let mut tasks = Vec::new();
    for track in 1..=3 {
        tasks.extend(gen_track(&world, &sttg, track, &cfg).unwrap().into_iter().take(20));
    }
    TaskSet::new(&world, Some(&sttg), cfg.seed, tasks)
}

/// Host `ids` on a loopback socket; `client` drives the other end.
fn over_tcp<T: Send + 'static>(
    set: &TaskSet,
    ids: &[String],
    client: impl FnOnce(TcpStream) -> T + Send + 'static,
) -> (Result<Vec<Transcript>, ProtocolError>, T) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = thread::spawn(move || {
        let s = TcpStream::connect(addr).unwrap();
        s.set_nodelay(true).unwrap();
        client(s)
    });
    let (stream, _) = listener.accept().unwrap();
    stream.set_nodelay(true).unwrap();
    let mut r = BufReader::new(stream.try_clone().unwrap());
    let mut w = stream;
    let hosted = host(&mut r, &mut w, set, ids, &EnvConfig::default());
    drop((r, w));
    (hosted, handle.join().unwrap())
}

#[test]
fn shipped_corpus_is_current() {
    let shipped = std::fs::read_to_string(crate_path("../../protocol/golden.jsonl")).unwrap();
    assert_eq!(shipped, golden_corpus());
}

#[test]
fn every_golden_line_round_trips() {
    let shipped = std::fs::read_to_string(crate_path("../../protocol/golden.jsonl")).unwrap();
    let mut kinds = std::collections::BTreeSet::new();
    for line in shipped.lines() {
        let msg = decode(line).unwrap();
        assert_eq!(encode(&msg), line);
        kinds.insert(line.split("\"kind\":\"").nth(1).unwrap().split('"').next().unwrap().to_string());
    }
    for k in ["hello", "task_offer", "action", "observation", "result"] {
        assert!(kinds.contains(k), "{k} missing");
    }
}

#[test]
fn readers_reject_other_versions() {
    assert!(matches!(decode(r#"{"kind":"hello","name":"x","role":"agent","v":2}"#), Err(ProtocolError::Version(_))));
    assert!(decode(r#"{"kind":"hello","name":"x","role":"agent"}"#).is_err());
    assert!(decode("not json").is_err());
    // Any key order is accepted on input.
    let m = decode(r#"{"v":1,"role":"agent","name":"x","kind":"hello"}"#).unwrap();
    assert_eq!(encode(&m), r#"{"kind":"hello","name":"x","role":"agent","v":1}"#);
}

#[test]
fn wire_transcripts_equal_in_process_ones() {
    let set = small_set();
    let ids: Vec<String> = set.tasks.iter().map(|t| t.id.clone()).collect();
    assert!(ids.len() >= 50);
    let local = run_batch(&set, &ids, &AgentConfig::new(AgentKind::Greedy), &EnvConfig::default()).unwrap();
    let (hosted, seen) = over_tcp(&set, &ids, |s| {
        let mut r = BufReader::new(s.try_clone().unwrap());
        let mut w = s;
        run_client(&mut r, &mut w, "greedy", |_| Box::new(PlannerAgent::greedy())).unwrap()
    });
    let hosted = hosted.unwrap();
    assert_eq!(hosted, local);
    assert_eq!(seen, local);
}

#[test]
fn oracle_needs_the_task_so_runs_in_process_only() {
    let set = small_set();
    let t = &set.tasks[0];
    let mut agent = make_agent(&AgentConfig::new(AgentKind::Oracle), t);
    let mut s = camsearch::env::Session::new(&set, &t.id, EnvConfig::default()).unwrap();
    agent.run(&mut s);
    assert_eq!(s.transcript().outcome, Outcome::Correct);
}

#[test]
fn dropped_connection_times_out_the_rest() {
    let set = small_set();
    let ids: Vec<String> = set.tasks.iter().take(5).map(|t| t.id.clone()).collect();
    let (hosted, _) = over_tcp(&set, &ids, |s| {
        let mut r = BufReader::new(s.try_clone().unwrap());
        let mut w = s;
        writeln!(w, r#"{{"kind":"hello","name":"quitter","role":"agent","v":1}}"#).unwrap();
        let mut line = String::new();
        r.read_line(&mut line).unwrap();
        line.clear();
        r.read_line(&mut line).unwrap();
        assert!(matches!(decode(&line).unwrap(), Message::TaskOffer { .. }));
    });
    let ts = hosted.unwrap();
    assert_eq!(ts.len(), 5);
    assert!(ts.iter().all(|t| t.outcome == Outcome::Timeout && t.agent == "quitter"));
}

#[test]
fn malformed_action_ends_the_connection() {
    let set = small_set();
    let ids: Vec<String> = set.tasks.iter().take(3).map(|t| t.id.clone()).collect();
    let (hosted, rest) = over_tcp(&set, &ids, |s| {
        let mut r = BufReader::new(s.try_clone().unwrap());
        let mut w = s;
        writeln!(w, r#"{{"kind":"hello","name":"sloppy","role":"agent","v":1}}"#).unwrap();
        writeln!(w, r#"{{"kind":"action","task_id":"x","action":{{"tool":"teleport"}},"v":1}}"#).unwrap();
        let mut lines = Vec::new();
        let mut line = String::new();
        while r.read_line(&mut line).unwrap() > 0 {
            lines.push(std::mem::take(&mut line));
        }
        lines
    });
    let ts = hosted.unwrap();
    assert!(ts.iter().all(|t| t.outcome == Outcome::Timeout));
    // hello and the first offer, then the stream closes.
    assert_eq!(rest.len(), 2);
}

#[test]
fn env_errors_are_observations_not_disconnects() {
    let set = small_set();
    let t1 = set.tasks.iter().find(|t| t.track == 2).unwrap().id.clone();
    let (hosted, replies) = over_tcp(&set, &[t1.clone()], move |s| {
        let mut r = BufReader::new(s.try_clone().unwrap());
        let mut w = s;
        let mut line = String::new();
        let mut next = |r: &mut BufReader<TcpStream>| {
            line.clear();
            r.read_line(&mut line).unwrap();
            decode(&line).unwrap()
        };
        writeln!(w, r#"{{"kind":"hello","name":"probe","role":"agent","v":1}}"#).unwrap();
        next(&mut r);
        next(&mut r);
        let mut out = Vec::new();
        for a in [r#"{"tool":"check_temporal"}"#, r#"{"tool":"ask_witness"}"#, r#"{"person":0,"tool":"predict"}"#] {
            writeln!(w, r#"{{"action":{a},"kind":"action","task_id":"{t1}","v":1}}"#).unwrap();
            out.push(next(&mut r));
        }
        out.push(next(&mut r));
        out
    });
    let ts = hosted.unwrap();
    assert_eq!(ts[0].counters.wrong_tool, 1);
    assert_eq!(ts[0].counters.malformed, 1);
    let errors: Vec<bool> = replies
        .iter()
        .map(|m| matches!(m, Message::Observation { error: Some(_), .. }))
        .collect();
    assert_eq!(errors, [true, true, false, false]);
    assert!(matches!(replies[3], Message::Result { .. }));
}
