use mmuav_core::array_channel::LinkBudget;
use mmuav_core::deployment::{discover, iterate_positioning, DeploymentScene, EnvironmentProfile, User};
use mmuav_core::rng::trial_rng;
use rand::Rng;

fn random_scene<R: Rng>(rng: &mut R) -> DeploymentScene {
    let n = rng.random_range(1..=6);
    DeploymentScene {
        uav_pos: [rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0), rng.random_range(20.0..150.0)],
        users: (0..n)
            .map(|id| User {
                id,
                pos: [rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0), 0.0],
            })
            .collect(),
        env: EnvironmentProfile::urban(),
        discovery_range_m: rng.random_range(100.0..400.0),
        signaling_cost: if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.5) },
        sweep_sectors: rng.random_range(1..=16),
        link: LinkBudget::mmwave_reference(),
    }
}

#[test]
fn utility_increases_at_every_accepted_move() {
    let mut rng = trial_rng(77, 0, 0);
    for _ in 0..100 {
        let sc = random_scene(&mut rng);
        let max_iters = 20;
        let t = iterate_positioning(&sc, max_iters).unwrap();
        assert!(t.steps.len() <= max_iters);
        for w in t.steps.windows(2) {
            assert!(w[0].moved);
            assert!(w[1].utility > w[0].utility + sc.signaling_cost);
        }
        assert_eq!(t.final_position[2], sc.uav_pos[2]);
    }
}

#[test]
fn infinite_cost_pins_the_uav() {
    let mut rng = trial_rng(78, 0, 0);
    for _ in 0..20 {
        let sc = DeploymentScene {
            signaling_cost: f64::INFINITY,
            ..random_scene(&mut rng)
        };
        let t = iterate_positioning(&sc, 10).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.final_position, sc.uav_pos);
    }
}

#[test]
fn larger_range_never_finds_fewer() {
    let mut rng = trial_rng(79, 0, 0);
    for _ in 0..100 {
        let sc = random_scene(&mut rng);
        let wider = DeploymentScene {
            discovery_range_m: sc.discovery_range_m * 1.5,
            ..sc.clone()
        };
        let a = discover(&sc).found;
        let b = discover(&wider).found;
        assert!(a.iter().all(|id| b.contains(id)));
    }
}
