use keri_core::kace::classify;
use keri_core::netsim::{duplicity_split, recovery_scenario, FaultMode, Role, Scenario, Sim};

/// Receipt counts of both versions for every split of the honest
/// witnesses; faulty witnesses receipt both.
fn split_sizes(n: usize, f: usize) -> Vec<(usize, usize)> {
    (0..1u32 << (n - f))
        .map(|mask| {
            let (sim, a, b) = duplicity_split(mask as u64, n, f, mask).unwrap();
            assert!(sim.honest_witnesses_safe());
            (sim.agreement_size(&a), sim.agreement_size(&b))
        })
        .collect()
}

#[test]
fn immune_tally_allows_at_most_one_sufficient_version() {
    for n in 1..=7usize {
        for f in 0..=(n - 1) / 3 {
            let sizes = split_sizes(n, f);
            for m in 1..=n {
                let immune = m as u32 >= (n as u32 + f as u32 + 1).div_ceil(2);
                let double = sizes.iter().any(|&(a, b)| a >= m && b >= m);
                if immune {
                    assert!(!double, "N={n} F={f} M={m}: two sufficient versions");
                }
                // below the bound some split does produce two
                if !immune && m as u32 <= n as u32 - f as u32 {
                    assert!(double, "N={n} F={f} M={m}: expected a double agreement");
                }
            }
            assert!(classify(n as u32, f as u32).intact);
        }
    }
}

#[test]
fn recovery_converges_whatever_the_exploit_reached() {
    for (seed, reach) in [[4, 4, 4], [0, 0, 0], [1, 2, 3], [3, 1, 0], [2, 2, 2]].iter().enumerate() {
        let sim = recovery_scenario(seed as u64, 4, 3, reach).unwrap();
        assert!(sim.converged("ctl"), "reach {reach:?}");
        assert!(sim.honest_witnesses_safe());
        let records = sim.node("val").unwrap().kerl.disputed(&sim.created("r7").unwrap().event.prefix);
        let accountable: Vec<u64> = records.iter().filter(|r| r.accountable).map(|r| r.sn).collect();
        // a witness only receipts an event once it holds the ones before it
        let expected: Vec<u64> = (0..reach.len())
            .filter(|&i| reach[..=i].iter().min().unwrap() >= &3)
            .map(|i| 7 + i as u64)
            .collect();
        assert_eq!(accountable, expected, "reach {reach:?}");
    }
}

#[test]
fn gossip_reaches_everyone() {
    let mut sim = Sim::new(3);
    for i in 1..=6 {
        sim.add_node(&format!("w{i}"), Role::Witness, FaultMode::Honest).unwrap();
    }
    sim.add_node("ctl", Role::Controller, FaultMode::Honest).unwrap();
    sim.create("e0", "ctl", keri_core::netsim::EventKind::Icp).unwrap();
    sim.deliver("e0", &["*".to_string()]).unwrap();
    let messages = sim.gossip("e0").unwrap();
    assert!(messages > 0);
    assert!(sim.transcript().last().unwrap().contains("complete=true"));
}

#[test]
fn scripted_insufficient_agreement_fails_its_assertion() {
    let text = "\
SEED 5
TALLY 3
NODE w1 witness
NODE w2 witness unresponsive
NODE w3 witness
NODE w4 witness unresponsive
NODE ctl controller
EVENT e0 ctl icp
ROUNDROBIN e0
ASSERT agreement e0 2
ASSERT sufficient e0
";
    let out = Sim::run(&Scenario::parse(text).unwrap()).unwrap();
    assert_eq!(out.assertions, vec![(10, true), (11, false)]);
    assert!(!out.passed());
}
