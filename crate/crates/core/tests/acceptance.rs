//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test --test acceptance`.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha3::{Digest as _, Keccak256};

use statepin::crypto::{
    derive_map_key, keccak256, AccountId, ChainSecret, Digest256, MapKey, Pbi, Pin, PinKeys,
};
use statepin::eventlog::to_jsonl;
use statepin::finality::{contest_period, contest_period_seconds, hierarchy_finality, LayerParams};
use statepin::registry::{
    ContestProof, ProposalAction, Registry, RegistryConfig, RegistryError, VotingConfig,
};
use statepin::scenario::spec::walk_chain;
use statepin::scenario::verify_log;

mod common;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Keccak256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

fn finality_numbers() -> Verdict {
    let start = Instant::now();
    let mainnet = LayerParams::mainnet(0);
    let ibft = LayerParams::ibft(0);
    let m = (contest_period(&mainnet), contest_period_seconds(&mainnet));
    let i = contest_period(&ibft);
    let report = hierarchy_finality(&[mainnet]).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        m == (15, 225) && i == 5 && report.worst_case_seconds == 225 && elapsed < Duration::from_millis(1),
        format!("mainnet {} blocks / {} s, ibft {} blocks, {:?}", m.0, m.1, i, elapsed),
    )
}

fn hourly_pinning() -> Verdict {
    let layer = LayerParams::mainnet(240);
    let report = hierarchy_finality(&[layer]).map_err(|e| e.to_string())?;
    let expected = 240 * 15 + contest_period_seconds(&layer);
    check(
        report.worst_case_seconds == 3825 && expected == 3825,
        format!("worst case {} s (pinning 3600 s + contest 225 s)", report.worst_case_seconds),
    )
}

fn contest_round_trip() -> Verdict {
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/collusion_revert.jsonl"))
        .map_err(|e| e.to_string())?;
    let mut slowest = Duration::ZERO;
    let mut runs = Vec::new();
    for _ in 0..3 {
        let start = Instant::now();
        let (sim, report) = common::run("collusion_revert");
        slowest = slowest.max(start.elapsed());
        if !report.passed {
            return Err(report.to_text());
        }
        runs.push(sim);
    }
    let identical = runs.iter().all(|s| common::log_text(s) == golden);

    let sim = &runs[0];
    let spec = common::spec("collusion_revert");
    let chain = spec.sim.chains.iter().find(|c| c.id == "consortium").unwrap();
    let p = chain.pins_to.as_ref().unwrap();
    let honest = &sim.chain("consortium").unwrap().honest;
    let walked = walk_chain(sim, "consortium");
    let Some(i) = walked.iter().position(|e| e.entry.contested) else {
        return Err("no contested entry".into());
    };
    let target = &walked[i];
    let registry = sim.chain("mgmt").unwrap().registry.as_ref().unwrap();
    let sentinel = registry.get_pin(&target.key) == Some(Pin::CONTESTED);
    let original_false = sim
        .pin_records()
        .iter()
        .find(|r| r.key == target.key)
        .is_some_and(|r| !honest.contains_hash(r.pin.digest()));
    let prev = if i == 0 { [0u8; 32] } else { *walked[i - 1].entry.pin.digest().as_bytes() };
    let prf = oracle(&[p.secret.expose(), &(target.t + 1).to_be_bytes()]);
    let next_key = oracle(&[p.pbi.as_bytes(), &prev, &prf]);
    let rollover = walked.get(i + 1).is_some_and(|n| {
        n.key.digest().as_bytes() == &next_key && !n.entry.contested && honest.contains_hash(n.entry.pin.digest())
    });
    check(
        sentinel && original_false && rollover && identical && slowest < Duration::from_secs(5),
        format!(
            "sentinel {sentinel}, replaced pin was false {original_false}, rollover at t+1 {rollover}, \
             golden identical x3 {identical}, slowest run {slowest:?}"
        ),
    )
}

fn admin() -> AccountId {
    AccountId::from_bytes([0xad; 20])
}

fn contest_soundness() -> Verdict {
    let pbi = Pbi::from_bytes([0x61; 32]);
    let keys = PinKeys::new(pbi, ChainSecret::from_bytes([0x62; 32]));
    let mut reg = Registry::deploy(RegistryConfig::new(VotingConfig::strict_majority(2), 5), BTreeSet::from([admin()]))
        .map_err(|e| e.to_string())?;
    reg.add_sidechain(admin(), pbi, VotingConfig::strict_majority(2), BTreeSet::from([admin()]), BTreeSet::new())
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    // Two real pins so that proofs may name an existing previous key.
    let p0 = Pin::new(Digest256::from_bytes(rng.gen()));
    let k0 = keys.key(&Pin::ZERO, 0);
    let p1 = Pin::new(Digest256::from_bytes(rng.gen()));
    let k1 = keys.key(&p0, 1);
    reg.add_pin(admin(), k0, p0).unwrap();
    reg.add_pin(admin(), k1, p1).unwrap();
    let targets = [(k0, MapKey::GENESIS_PREV, 0u64), (k1, k0, 1)];

    let (mut linkage, mut accepted, mut other) = (0u32, 0u32, 0u32);
    for n in 0..10_000u32 {
        let (target, true_prev, t) = targets[n as usize % 2];
        // Corrupt the prf, the previous key, or both.
        let (prev_key, prf) = match rng.gen_range(0..3) {
            0 => (true_prev, Digest256::from_bytes(rng.gen())),
            1 => (targets[1 - n as usize % 2].1, keys.prf(t)),
            _ => (MapKey::GENESIS_PREV, keys.prf(t + rng.gen_range(2..1000))),
        };
        let derived = derive_map_key(&pbi, &if prev_key == MapKey::GENESIS_PREV { Pin::ZERO } else { p0 }, &prf);
        if derived == target {
            // The corruption happened to produce a valid tuple; not a test case.
            continue;
        }
        match reg.propose_vote(admin(), pbi, ProposalAction::ContestPin { target }, Some(ContestProof { prev_key, prf })) {
            Err(RegistryError::LinkageInvalid(_)) => linkage += 1,
            Ok(_) => accepted += 1,
            Err(_) => other += 1,
        }
    }
    check(
        linkage == 10_000 && accepted == 0 && other == 0,
        format!("{linkage} rejected with linkage_invalid, {accepted} accepted, {other} other errors"),
    )
}

fn security_analogues() -> Verdict {
    let pbi = Pbi::from_bytes([0x71; 32]);
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11ce);

    // (a) The attacker knows all but 16 bits of the seed and sees key 0.
    let mut seed: [u8; 32] = rng.gen();
    let hidden: u16 = rng.gen();
    seed[30..].copy_from_slice(&hidden.to_be_bytes());
    let observed = PinKeys::new(pbi, ChainSecret::from_bytes(seed)).key(&Pin::ZERO, 0);
    let mut hits = Vec::new();
    for guess in 0..=u16::MAX {
        let mut candidate = seed;
        candidate[30..].copy_from_slice(&guess.to_be_bytes());
        if PinKeys::new(pbi, ChainSecret::from_bytes(candidate)).key(&Pin::ZERO, 0) == observed {
            hits.push(guess);
        }
    }
    let brute_ok = hits == [hidden];
    let mut random_hits = 0;
    for _ in 0..100_000 {
        let guess = ChainSecret::from_bytes(rng.gen());
        if PinKeys::new(pbi, guess).key(&Pin::ZERO, 0) == observed {
            random_hits += 1;
        }
    }

    // (b) Avalanche over single-bit flips of each of the three inputs.
    let trials = 1536;
    let mut total = 0u64;
    for n in 0..trials {
        let mut inputs: [[u8; 32]; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let base = derive_map_key(&Pbi::from_bytes(inputs[0]), &Pin::new(Digest256::from_bytes(inputs[1])), &Digest256::from_bytes(inputs[2]));
        let bit = n % 256;
        inputs[n / 512][bit / 8] ^= 1 << (bit % 8);
        let flipped = derive_map_key(&Pbi::from_bytes(inputs[0]), &Pin::new(Digest256::from_bytes(inputs[1])), &Digest256::from_bytes(inputs[2]));
        total += base.digest().hamming_distance(flipped.digest()) as u64;
    }
    let mean = total as f64 / trials as f64;

    // (c) No secret, in any encoding a serializer might use, in any log or state.
    let mut leaks = Vec::new();
    for name in common::names() {
        let spec = common::spec(name);
        let (sim, report) = common::run(name);
        let text = format!(
            "{}{}{}",
            common::log_text(&sim),
            common::state_text(&sim),
            serde_json::to_string(&report).unwrap()
        );
        let lower = text.to_lowercase();
        for chain in &spec.sim.chains {
            let Some(p) = &chain.pins_to else { continue };
            let secret = p.secret.expose();
            let hex = hex::encode(secret);
            let bytes: String = secret.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",");
            if lower.contains(&hex) || text.contains(&bytes) || text.as_bytes().windows(32).any(|w| w == secret) {
                leaks.push(format!("{name}/{}", chain.id));
            }
        }
    }

    check(
        brute_ok && random_hits == 0 && (116.0..=140.0).contains(&mean) && leaks.is_empty(),
        format!(
            "16-bit search: {} match(es) over 65536 candidates, hidden value found {}; \
             full-seed random trials: {random_hits}/100000; avalanche mean {mean:.2} bits over {trials} flips; \
             secret leaks: {leaks:?}",
            hits.len(),
            brute_ok
        ),
    )
}

fn mean_pairwise(a: &[MapKey], b: &[MapKey], same: bool) -> f64 {
    let (mut sum, mut n) = (0u64, 0u64);
    for (i, x) in a.iter().enumerate() {
        let rest = if same { &b[i + 1..] } else { b };
        for y in rest {
            sum += x.digest().hamming_distance(y.digest()) as u64;
            n += 1;
        }
    }
    sum as f64 / n as f64
}

fn rate_hiding() -> Verdict {
    let spec = common::spec("shared_registry");
    let (sim, _) = common::run("shared_registry");
    let records = sim.log().to_vec();
    let mut recovered = Vec::new();
    let mut details = Vec::new();
    let mut exact = true;
    for id in ["chain_a", "chain_b"] {
        let idx = spec.sim.chains.iter().position(|c| c.id == id).unwrap();
        let p = spec.sim.chains[idx].pins_to.as_ref().unwrap();
        let report = verify_log(&records, &PinKeys::new(p.pbi, p.secret.clone()));
        let got: BTreeSet<MapKey> = report.pins.iter().map(|v| v.key).collect();
        let truth: BTreeSet<MapKey> = sim.pin_records().iter().filter(|r| r.chain == idx).map(|r| r.key).collect();
        let tp = got.intersection(&truth).count();
        exact &= got == truth && truth.len() >= 100 && report.is_consistent();
        details.push(format!(
            "{id}: {} pins, precision {:.3}, recall {:.3}",
            truth.len(),
            tp as f64 / got.len().max(1) as f64,
            tp as f64 / truth.len().max(1) as f64
        ));
        recovered.push(got.into_iter().collect::<Vec<_>>());
    }
    let within_a = mean_pairwise(&recovered[0], &recovered[0], true);
    let within_b = mean_pairwise(&recovered[1], &recovered[1], true);
    let within = (within_a + within_b) / 2.0;
    let cross = mean_pairwise(&recovered[0], &recovered[1], false);
    let rel = (cross - within).abs() / within;
    check(
        exact && rel <= 0.05,
        format!(
            "{}; mean pairwise distance within {within:.2}, across {cross:.2} ({:.2}% apart)",
            details.join("; "),
            rel * 100.0
        ),
    )
}

fn window_enforcement() -> Verdict {
    let (dispute, voting) = (6u64, 3u64);
    let pbi = Pbi::from_bytes([0x81; 32]);
    let keys = PinKeys::new(pbi, ChainSecret::from_bytes([0x82; 32]));
    let fresh = |posted_at: u64| -> Registry {
        let mut reg = Registry::deploy(RegistryConfig::new(VotingConfig::strict_majority(voting), dispute), BTreeSet::from([admin()])).unwrap();
        reg.add_sidechain(admin(), pbi, VotingConfig::strict_majority(voting), BTreeSet::from([admin()]), BTreeSet::new()).unwrap();
        reg.advance_height(posted_at).unwrap();
        reg.add_pin(admin(), keys.key(&Pin::ZERO, 0), Pin::new(Digest256::from_bytes([9; 32]))).unwrap();
        reg
    };
    let target = keys.key(&Pin::ZERO, 0);
    let contest = |reg: &mut Registry| {
        let proof = ContestProof { prev_key: MapKey::GENESIS_PREV, prf: keys.prf(0) };
        reg.propose_vote(admin(), pbi, ProposalAction::ContestPin { target }, Some(proof))
    };
    let posted_at = 10;

    let mut late = fresh(posted_at);
    late.advance_height(posted_at + dispute).unwrap();
    let at_boundary = contest(&mut late);

    let mut last = fresh(posted_at);
    last.advance_height(posted_at + dispute - 1).unwrap();
    let inside = contest(&mut last);

    let mut reg = fresh(posted_at);
    let opened_at = posted_at + 1;
    reg.advance_height(opened_at).unwrap();
    let id = contest(&mut reg).map_err(|e| e.to_string())?;
    reg.advance_height(opened_at + voting - 1).unwrap();
    let early = reg.action_votes(admin(), pbi, id);
    reg.advance_height(opened_at + voting).unwrap();
    let on_time = reg.action_votes(admin(), pbi, id);

    let equal = Registry::deploy(RegistryConfig::new(VotingConfig::strict_majority(dispute), dispute), BTreeSet::from([admin()]));
    let mut base = Registry::deploy(RegistryConfig::new(VotingConfig::strict_majority(voting), dispute), BTreeSet::from([admin()])).unwrap();
    let side_equal = base.add_sidechain(admin(), pbi, VotingConfig::strict_majority(dispute), BTreeSet::new(), BTreeSet::new());

    let ok = at_boundary == Err(RegistryError::DisputeWindowClosed(target))
        && inside.is_ok()
        && early == Err(RegistryError::VotingStillOpen(id))
        && on_time.is_ok()
        && matches!(equal, Err(RegistryError::InvalidConfig(_)))
        && matches!(side_equal, Err(RegistryError::InvalidConfig(_)));
    check(
        ok,
        format!(
            "propose at posted+D: {:?}; at posted+D-1: {}; action at opened+V-1: {:?}; at opened+V: {:?}; D = V at deploy: {}, at add_sidechain: {}",
            at_boundary.map_err(|e| e.code()),
            if inside.is_ok() { "accepted" } else { "rejected" },
            early.map_err(|e| e.code()),
            on_time.map_err(|e| e.code()),
            if equal.is_err() { "rejected" } else { "accepted" },
            if side_equal.is_err() { "rejected" } else { "accepted" },
        ),
    )
}

fn keccak_conformance() -> Verdict {
    let failures: Vec<_> = common::VECTORS
        .iter()
        .filter(|(input, want)| keccak256(input).to_hex().trim_start_matches("0x") != *want)
        .collect();
    let has_empty = common::VECTORS.iter().any(|(input, _)| input.is_empty());
    check(
        failures.is_empty() && has_empty && common::VECTORS.len() >= 10,
        format!("{} vectors (empty string included: {has_empty}), {} mismatches", common::VECTORS.len(), failures.len()),
    )
}

fn determinism() -> Verdict {
    let mut differing = Vec::new();
    for name in common::names() {
        let (a, _) = common::run(name);
        let (b, _) = common::run(name);
        if to_jsonl(a.log()) != to_jsonl(b.log()) || common::state_text(&a) != common::state_text(&b) {
            differing.push(name);
        }
    }
    check(
        differing.is_empty(),
        format!("{} scenarios replayed, differing: {differing:?}", common::names().count()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("finality numbers", finality_numbers),
        ("hourly pinning finality", hourly_pinning),
        ("contest round trip", contest_round_trip),
        ("contest soundness fuzz", contest_soundness),
        ("security analogues", security_analogues),
        ("rate-hiding partition", rate_hiding),
        ("window enforcement", window_enforcement),
        ("keccak conformance", keccak_conformance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
