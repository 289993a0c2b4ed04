#![allow(dead_code)]

use statepin::eventlog::to_jsonl;
use statepin::scenario::{bundled, run_scenario, RunReport, ScenarioSpec, BUNDLED};
use statepin::sim::Simulation;

/// (input, digest). Inputs are the Keccak team's short-message KAT entries and
/// well-known Ethereum ABI signatures.
pub const VECTORS: &[(&[u8], &str)] = &[
    (b"", "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"),
    (&[0xcc], "eead6dbfc7340a56caedc044696a168870549a6a7f6f56961e84a54bd9970b8a"),
    (&[0x41, 0xfb], "a8eaceda4d47b3281a795ad9e1ea2122b407baf9aabcb9e18b5717b7873537d2"),
    (&[0x1f, 0x87, 0x7c], "627d7bc1491b2ab127282827b8de2d276b13d7d70fb4c5957fdf20655bc7ac30"),
    (b"abc", "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"),
    (b"hello", "1c8aff950685c2ed4bc3174f3472287b56d9517b9c948127319a09a7a36deac8"),
    (b"hello world", "47173285a8d7341e5e972fc677286384f802f8ef42a5ec5f03bbfa254cb01fad"),
    (b"testing", "5f16f4c7f149ac4f9510d9cf8cf384038ad348b3bcdc01915f95de12df9d1b02"),
    (b"The quick brown fox jumps over the lazy dog", "4d741b6f1eb29cb2a9b9911c82f56fa8d73b04959d3d9d222895df6c0b28aa15"),
    (b"The quick brown fox jumps over the lazy dog.", "578951e24efd62a3d63a86f7cd19aaa53c898fe287d2552133220370240b572d"),
    (b"Transfer(address,address,uint256)", "ddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef"),
    (b"Approval(address,address,uint256)", "8c5be1e5ebec7d5bd14f71427d1e84f3dd0314c0f7b2291e5b200ac8c7c3b925"),
    (b"transfer(address,uint256)", "a9059cbb2ab09eb219583f4a59a5d0623ade346d962bcd4e46b11da047c9049b"),
    (b"balanceOf(address)", "70a08231b98ef4ca268c9cc3f6b4590e4bfec28280db06bb5d45e689f2a360be"),
];

pub fn spec(name: &str) -> ScenarioSpec {
    ScenarioSpec::from_json(bundled(name).expect("bundled scenario")).expect("bundled scenarios are valid")
}

pub fn run(name: &str) -> (Simulation, RunReport) {
    run_scenario(&spec(name)).expect("bundled scenarios are valid")
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn log_text(sim: &Simulation) -> String {
    to_jsonl(sim.log())
}

/// Every registry's final state, serialized, in chain order.
pub fn state_text(sim: &Simulation) -> String {
    sim.chains()
        .iter()
        .filter_map(|c| c.registry.as_ref().map(|r| format!("{}: {}\n", c.id, r.state().to_json())))
        .collect()
}
