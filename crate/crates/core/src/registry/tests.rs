use super::*;
use crate::crypto::{prf_value, ChainSecret, Digest256};

fn acct(n: u8) -> AccountId {
    AccountId::from_bytes([n; 20])
}

fn pin(n: u8) -> Pin {
    Pin::new(Digest256::from_bytes([n; 32]))
}

const PBI: Pbi = Pbi::from_bytes([0x42; 32]);
const ADMIN: u8 = 1;
const ALICE: u8 = 2;
const BOB: u8 = 3;
const CAROL: u8 = 4;
const MASKED: u8 = 5;
const OUTSIDER: u8 = 9;

fn config() -> RegistryConfig {
    RegistryConfig::new(VotingConfig::strict_majority(3), 10)
}

fn secret() -> ChainSecret {
    ChainSecret::from_bytes([0x77; 32])
}

fn salt() -> Salt {
    Salt::from_bytes([0x5a; 32])
}

/// Registry with sidechain PBI: Alice, Bob, Carol unmasked, one masked member.
fn setup() -> Registry {
    let mut reg = Registry::deploy(config(), BTreeSet::from([acct(ADMIN)])).unwrap();
    reg.add_sidechain(
        acct(ADMIN),
        PBI,
        VotingConfig::strict_majority(3),
        BTreeSet::from([acct(ALICE), acct(BOB), acct(CAROL)]),
        BTreeSet::from([mask_participant(&acct(MASKED), &salt())]),
    )
    .unwrap();
    reg
}

/// Posts pins for t = 0 and t = 1 and returns their keys.
fn post_two(reg: &mut Registry) -> (MapKey, MapKey) {
    let k0 = derive_map_key(&PBI, &Pin::ZERO, &prf_value(&secret(), 0));
    reg.add_pin(acct(OUTSIDER), k0, pin(0xa0)).unwrap();
    let k1 = derive_map_key(&PBI, &pin(0xa0), &prf_value(&secret(), 1));
    reg.add_pin(acct(OUTSIDER), k1, pin(0xa1)).unwrap();
    (k0, k1)
}

fn contest(reg: &mut Registry, caller: u8, prev: MapKey, target: MapKey, t: u64) -> Result<u64> {
    reg.propose_vote(
        acct(caller),
        PBI,
        ProposalAction::ContestPin { target },
        Some(ContestProof {
            prev_key: prev,
            prf: prf_value(&secret(), t),
        }),
    )
}

#[test]
fn deploy_creates_management_sidechain() {
    let reg = Registry::deploy(config(), BTreeSet::from([acct(ADMIN)])).unwrap();
    let state = reg.state();
    assert_eq!(state.sidechains.len(), 1);
    let mgmt = state.sidechain(&Pbi::MANAGEMENT).unwrap();
    assert_eq!(mgmt.unmasked, BTreeSet::from([acct(ADMIN)]));
    assert!(state.pins.is_empty());
}

#[test]
fn deploy_rejects_dispute_equal_to_voting_period() {
    let cfg = RegistryConfig::new(VotingConfig::strict_majority(5), 5);
    assert!(matches!(
        Registry::deploy(cfg, BTreeSet::from([acct(ADMIN)])),
        Err(RegistryError::InvalidConfig(_))
    ));
    let zero_voting = RegistryConfig::new(VotingConfig::strict_majority(0), 5);
    assert!(matches!(
        Registry::deploy(zero_voting, BTreeSet::from([acct(ADMIN)])),
        Err(RegistryError::InvalidConfig(_))
    ));
    assert!(matches!(
        Registry::deploy(config(), BTreeSet::new()),
        Err(RegistryError::InvalidConfig(_))
    ));
}

#[test]
fn deploy_is_deterministic() {
    let a = Registry::deploy(config(), BTreeSet::from([acct(ADMIN)])).unwrap();
    let b = Registry::deploy(config(), BTreeSet::from([acct(ADMIN)])).unwrap();
    assert_eq!(a.state().to_json(), b.state().to_json());
}

#[test]
fn add_sidechain_checks() {
    let mut reg = setup();
    let record = reg.state().sidechain(&PBI).unwrap();
    assert!(record.is_unmasked(&acct(ALICE)));
    assert_eq!(record.masked.len(), 1);

    let other = Pbi::from_bytes([0x43; 32]);
    let voting = VotingConfig::strict_majority(3);
    assert_eq!(
        reg.add_sidechain(acct(ALICE), other, voting, BTreeSet::new(), BTreeSet::new()),
        Err(RegistryError::NotAuthorized(Pbi::MANAGEMENT))
    );
    assert_eq!(
        reg.add_sidechain(acct(ADMIN), Pbi::MANAGEMENT, voting, BTreeSet::new(), BTreeSet::new()),
        Err(RegistryError::ReservedId(Pbi::MANAGEMENT))
    );
    assert_eq!(
        reg.add_sidechain(acct(ADMIN), PBI, voting, BTreeSet::new(), BTreeSet::new()),
        Err(RegistryError::DuplicateSidechain(PBI))
    );
    assert!(matches!(
        reg.add_sidechain(
            acct(ADMIN),
            other,
            VotingConfig::strict_majority(10),
            BTreeSet::new(),
            BTreeSet::new()
        ),
        Err(RegistryError::InvalidConfig(_))
    ));
}

#[test]
fn add_pin_is_permissionless_and_write_once() {
    let mut reg = setup();
    let key = MapKey::new(Digest256::from_bytes([1; 32]));
    assert_eq!(reg.get_pin(&key), None);
    reg.add_pin(acct(OUTSIDER), key, pin(7)).unwrap();
    assert_eq!(reg.get_pin(&key), Some(pin(7)));
    assert_eq!(reg.add_pin(acct(ALICE), key, pin(8)), Err(RegistryError::KeyOccupied(key)));
    assert_eq!(reg.get_pin(&key), Some(pin(7)));
    assert_eq!(
        reg.add_pin(acct(ALICE), MapKey::GENESIS_PREV, pin(8)),
        Err(RegistryError::ReservedKey(MapKey::GENESIS_PREV))
    );
}

#[test]
fn unmask_flow() {
    let mut reg = setup();
    let before = reg.state().clone();
    assert_eq!(
        reg.unmask(acct(MASKED), PBI, &Salt::from_bytes([0; 32])),
        Err(RegistryError::NotMasked)
    );
    assert_eq!(reg.state(), &before);

    reg.unmask(acct(MASKED), PBI, &salt()).unwrap();
    let record = reg.state().sidechain(&PBI).unwrap();
    assert!(record.is_unmasked(&acct(MASKED)));
    assert!(record.masked.is_empty());
    assert_eq!(reg.unmask(acct(MASKED), PBI, &salt()), Err(RegistryError::NotMasked));
    assert_eq!(
        reg.unmask(acct(MASKED), Pbi::from_bytes([9; 32]), &salt()),
        Err(RegistryError::NoSuchSidechain(Pbi::from_bytes([9; 32])))
    );
}

#[test]
fn contest_happy_path_replaces_pin_with_sentinel() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    reg.advance_height(1).unwrap();
    let id = contest(&mut reg, ALICE, k0, k1, 1).unwrap();
    reg.vote(acct(BOB), PBI, id, true).unwrap();
    reg.advance_height(4).unwrap();
    assert_eq!(reg.action_votes(acct(CAROL), PBI, id), Ok(Outcome::Passed));
    assert_eq!(reg.get_pin(&k1), Some(Pin::CONTESTED));
    assert!(reg.state().pins[&k1].contested);
    assert_eq!(reg.get_pin(&k0), Some(pin(0xa0)));
}

#[test]
fn genesis_pin_can_be_contested() {
    let mut reg = setup();
    let (k0, _) = post_two(&mut reg);
    let id = contest(&mut reg, ALICE, MapKey::GENESIS_PREV, k0, 0).unwrap();
    reg.advance_height(3).unwrap();
    assert_eq!(reg.action_votes(acct(ALICE), PBI, id), Ok(Outcome::Passed));
    assert_eq!(reg.get_pin(&k0), Some(Pin::CONTESTED));
}

#[test]
fn contest_rejections() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);

    assert_eq!(contest(&mut reg, ALICE, k0, k1, 2), Err(RegistryError::LinkageInvalid(k1)));
    assert_eq!(contest(&mut reg, OUTSIDER, k0, k1, 1), Err(RegistryError::NotAuthorized(PBI)));
    assert_eq!(
        contest(&mut reg, MASKED, k0, k1, 1),
        Err(RegistryError::NotAuthorized(PBI))
    );
    let missing = MapKey::new(Digest256::from_bytes([3; 32]));
    assert_eq!(contest(&mut reg, ALICE, k0, missing, 1), Err(RegistryError::NoSuchPin(missing)));
    assert_eq!(contest(&mut reg, ALICE, missing, k1, 1), Err(RegistryError::NoSuchPin(missing)));
    assert_eq!(
        reg.propose_vote(acct(ALICE), PBI, ProposalAction::ContestPin { target: k1 }, None),
        Err(RegistryError::MissingContestProof)
    );

    let id = contest(&mut reg, ALICE, k0, k1, 1).unwrap();
    assert_eq!(
        contest(&mut reg, BOB, k0, k1, 1),
        Err(RegistryError::DuplicateActiveProposal(id))
    );
}

#[test]
fn dispute_window_is_strict() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    let dispute = config().pin_dispute_period;
    reg.advance_height(dispute - 1).unwrap();
    assert!(!reg.is_pin_final(&k1).unwrap());
    reg.advance_height(dispute).unwrap();
    assert_eq!(contest(&mut reg, ALICE, k0, k1, 1), Err(RegistryError::DisputeWindowClosed(k1)));
    assert!(reg.is_pin_final(&k1).unwrap());
}

#[test]
fn vote_rules() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    let id = contest(&mut reg, ALICE, k0, k1, 1).unwrap();
    assert_eq!(reg.vote(acct(ALICE), PBI, id, true), Err(RegistryError::AlreadyVoted(id)));
    reg.vote(acct(BOB), PBI, id, false).unwrap();
    assert_eq!(reg.vote(acct(BOB), PBI, id, true), Err(RegistryError::AlreadyVoted(id)));
    assert_eq!(reg.vote(acct(MASKED), PBI, id, true), Err(RegistryError::NotAuthorized(PBI)));
    assert_eq!(
        reg.vote(acct(CAROL), PBI, 99, true),
        Err(RegistryError::NoSuchProposal(PBI, 99))
    );
    reg.advance_height(3).unwrap();
    assert_eq!(reg.vote(acct(CAROL), PBI, id, true), Err(RegistryError::VotingClosed(id)));
}

#[test]
fn tie_fails_and_pin_stands_then_retry_allowed() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    let id = contest(&mut reg, ALICE, k0, k1, 1).unwrap();
    reg.vote(acct(BOB), PBI, id, false).unwrap();
    reg.advance_height(2).unwrap();
    assert_eq!(reg.action_votes(acct(ALICE), PBI, id), Err(RegistryError::VotingStillOpen(id)));
    reg.advance_height(3).unwrap();
    assert_eq!(reg.action_votes(acct(ALICE), PBI, id), Ok(Outcome::Failed));
    assert_eq!(reg.action_votes(acct(ALICE), PBI, id), Err(RegistryError::AlreadyActioned(id)));
    assert_eq!(reg.get_pin(&k1), Some(pin(0xa1)));

    let retry = contest(&mut reg, CAROL, k0, k1, 1).unwrap();
    assert_ne!(retry, id);
}

#[test]
fn action_after_dispute_window_leaves_pin_final() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    reg.advance_height(5).unwrap();
    let id = contest(&mut reg, ALICE, k0, k1, 1).unwrap();
    reg.advance_height(10).unwrap();
    assert_eq!(
        reg.action_votes(acct(ALICE), PBI, id),
        Err(RegistryError::DisputeWindowClosed(k1))
    );
    assert_eq!(reg.get_pin(&k1), Some(pin(0xa1)));
    assert!(reg.is_pin_final(&k1).unwrap());
}

#[test]
fn sentinel_is_never_final() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    let id = contest(&mut reg, ALICE, k0, k1, 1).unwrap();
    reg.advance_height(3).unwrap();
    reg.action_votes(acct(ALICE), PBI, id).unwrap();
    for h in [3, 10, 1_000, 1_000_000] {
        reg.advance_height(h).unwrap();
        assert!(!reg.is_pin_final(&k1).unwrap());
    }
    assert_eq!(contest(&mut reg, ALICE, k0, k1, 1), Err(RegistryError::ContestedPin(k1)));
    let missing = MapKey::new(Digest256::from_bytes([3; 32]));
    assert_eq!(reg.is_pin_final(&missing), Err(RegistryError::NoSuchPin(missing)));
}

#[test]
fn advance_height_rules() {
    let mut reg = setup();
    reg.advance_height(5).unwrap();
    reg.advance_height(9).unwrap();
    assert_eq!(reg.height(), 9);
    let n = reg.events().len();
    reg.advance_height(9).unwrap();
    assert_eq!(reg.events().len(), n);
    assert_eq!(
        reg.advance_height(3),
        Err(RegistryError::ClockRegression { current: 9, attempted: 3 })
    );
}

#[test]
fn membership_proposals() {
    let mut reg = setup();
    let dave = acct(6);
    let id = reg
        .propose_vote(acct(ALICE), PBI, ProposalAction::AddUnmasked { account: dave }, None)
        .unwrap();
    reg.vote(acct(BOB), PBI, id, true).unwrap();
    reg.advance_height(3).unwrap();
    reg.action_votes(acct(BOB), PBI, id).unwrap();
    assert!(reg.state().sidechain(&PBI).unwrap().is_unmasked(&dave));

    let masked = mask_participant(&acct(7), &salt());
    let id = reg
        .propose_vote(acct(dave.as_bytes()[0]), PBI, ProposalAction::AddMasked { masked }, None)
        .unwrap();
    reg.advance_height(6).unwrap();
    reg.action_votes(acct(ALICE), PBI, id).unwrap();
    assert!(reg.state().sidechain(&PBI).unwrap().masked.contains(&masked));

    let id = reg
        .propose_vote(acct(ALICE), PBI, ProposalAction::RemoveMasked { masked }, None)
        .unwrap();
    reg.advance_height(9).unwrap();
    reg.action_votes(acct(ALICE), PBI, id).unwrap();
    assert!(!reg.state().sidechain(&PBI).unwrap().masked.contains(&masked));
}

#[test]
fn removing_last_participant_logs_warning() {
    let mut reg = Registry::deploy(config(), BTreeSet::from([acct(ADMIN)])).unwrap();
    reg.add_sidechain(
        acct(ADMIN),
        PBI,
        VotingConfig::strict_majority(1),
        BTreeSet::from([acct(ALICE)]),
        BTreeSet::new(),
    )
    .unwrap();
    let id = reg
        .propose_vote(acct(ALICE), PBI, ProposalAction::RemoveUnmasked { account: acct(ALICE) }, None)
        .unwrap();
    reg.advance_height(1).unwrap();
    reg.action_votes(acct(ALICE), PBI, id).unwrap();
    assert!(reg.state().sidechain(&PBI).unwrap().unmasked.is_empty());
    assert_eq!(reg.events().last().unwrap().event_type(), "sidechain_ungovernable");
    assert_eq!(
        reg.propose_vote(acct(ALICE), PBI, ProposalAction::AddUnmasked { account: acct(ALICE) }, None),
        Err(RegistryError::NotAuthorized(PBI))
    );
}

#[test]
fn removed_voter_no_longer_counts() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    let contest_id = contest(&mut reg, ALICE, k0, k1, 1).unwrap();
    reg.vote(acct(BOB), PBI, contest_id, false).unwrap();
    reg.vote(acct(CAROL), PBI, contest_id, false).unwrap();
    let remove = reg
        .propose_vote(acct(ALICE), PBI, ProposalAction::RemoveUnmasked { account: acct(BOB) }, None)
        .unwrap();
    reg.vote(acct(CAROL), PBI, remove, true).unwrap();
    reg.advance_height(3).unwrap();
    reg.action_votes(acct(ALICE), PBI, remove).unwrap();
    let proposal = reg.state().proposal(&PBI, contest_id).unwrap().clone();
    let tally = reg.state().tally(&proposal);
    assert_eq!((tally.yes, tally.no, tally.eligible), (1, 1, 2));
    assert_eq!(reg.action_votes(acct(ALICE), PBI, contest_id), Ok(Outcome::Failed));
}

#[test]
fn replay_reproduces_state() {
    let mut reg = setup();
    let (k0, k1) = post_two(&mut reg);
    reg.unmask(acct(MASKED), PBI, &salt()).unwrap();
    reg.advance_height(2).unwrap();
    let id = contest(&mut reg, MASKED, k0, k1, 1).unwrap();
    reg.vote(acct(BOB), PBI, id, true).unwrap();
    reg.advance_height(5).unwrap();
    reg.action_votes(acct(BOB), PBI, id).unwrap();

    let replayed = RegistryState::replay(reg.events()).unwrap();
    assert_eq!(replayed.to_json(), reg.state().to_json());

    let records: Vec<_> = reg.events().iter().map(RegistryEvent::to_record).collect();
    let parsed: Vec<_> = records
        .iter()
        .map(|r| RegistryEvent::from_record(&r.clone()).unwrap())
        .collect();
    assert_eq!(parsed, reg.events());
}

#[test]
fn replay_rejects_malformed_logs() {
    assert!(matches!(RegistryState::replay(&[]), Err(ReplayError::Empty)));
    let reg = setup();
    assert!(matches!(
        RegistryState::replay(&reg.events()[1..]),
        Err(ReplayError::NotDeployed("sidechain_added"))
    ));
    let mut doubled = reg.events().to_vec();
    doubled.push(reg.events()[1].clone());
    assert!(matches!(
        RegistryState::replay(&doubled),
        Err(ReplayError::Inconsistent { index: 2, .. })
    ));
}

#[test]
fn state_json_round_trips() {
    let mut reg = setup();
    post_two(&mut reg);
    let json = reg.state().to_json();
    let back: RegistryState = serde_json::from_str(&json).unwrap();
    assert_eq!(&back, reg.state());
}
