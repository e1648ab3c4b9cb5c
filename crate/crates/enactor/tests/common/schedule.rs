//! Swap requests racing with event producers on other threads, compared
//! against the same events replayed with the swap taken at quiescence.

use std::sync::mpsc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyweave_enactor::{Dir, Enactable, Enactor, FallbackPlan, Record, Swap};
use skyweave_lts::{Label, Lts};

use super::{fixture, EnvSim};

fn key(r: &Record) -> (Dir, String, u32, u32) {
    (r.dir, r.label.clone(), r.before, r.after)
}

/// Replays the events of `log` tick by tick, swapping at quiescence.
fn quiescent_replay(log: &[Record], c: &Enactable, swap: &Swap) -> Vec<Record> {
    let mut e = Enactor::new(c.clone(), FallbackPlan::return_and_land(4));
    let last = log.last().map_or(0, |r| r.tick);
    for t in 1..=last {
        let tick: Vec<&Record> = log.iter().filter(|r| r.tick == t).collect();
        for r in &tick {
            if matches!(r.dir, Dir::In | Dir::Absorbed | Dir::Fallback) {
                e.push(Label::new(&r.label).unwrap());
            }
        }
        if tick.iter().any(|r| r.dir == Dir::Swap) {
            e.drain();
            e.hotswap(swap.clone()).unwrap();
        }
        e.tick();
    }
    e.log().to_vec()
}

/// Labels of the log form a run of `combined`.
fn accepted(combined: &Lts, log: &[Record]) -> bool {
    let mut s = combined.initial();
    for r in log {
        let l = match r.dir {
            Dir::In | Dir::Out => r.label.as_str(),
            Dir::Swap => "hotSwap",
            _ => continue,
        };
        match combined.step(s, l) {
            Ok(next) if !next.is_empty() => s = *next.iter().next().unwrap(),
            _ => return false,
        }
    }
    true
}

/// Runs `schedules` random interleavings of the delivery reroute and
/// panics on the first that differs from its quiescent replay. Returns how
/// many schedules swapped.
pub fn racing_schedules(seed: u64, schedules: usize) -> usize {
    let f = fixture("delivery.fsl", "Reroute");
    let lts = &f.sol.env.lts;
    let start = Enactable::from_controller(&f.c);
    let swap = Swap::from_update(&f.sol, vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swapped = 0;
    for _ in 0..schedules {
        let mut e = Enactor::new(start.clone(), FallbackPlan::return_and_land(4));
        let controlled = |l: &Label| f.sol.problem.is_controlled(l);
        let mut env = EnvSim { lts, state: lts.initial(), controlled: Box::new(controlled) };
        let steps = rng.random_range(5..60);
        let swap_at = rng.random_range(0..steps);
        let (go_tx, go_rx) = mpsc::channel::<()>();
        let h = e.handle();
        let s = swap.clone();
        let swapper = thread::spawn(move || {
            go_rx.recv().unwrap();
            h.request_swap(s);
        });
        let h = e.handle();
        let noise = rng.random_range(0..4);
        let chatter = thread::spawn(move || {
            for _ in 0..noise {
                h.push(Label::from_static("low.bat"));
                thread::yield_now();
            }
        });
        let mut env_swapped = false;
        for i in 0..steps {
            if i == swap_at {
                go_tx.send(()).unwrap();
            }
            if rng.random_bool(0.6) {
                if let Some(ev) = env.pick(&mut rng) {
                    e.push(ev);
                }
            }
            if rng.random_bool(0.3) {
                thread::yield_now();
            }
            let before = e.version();
            let cmds = e.tick();
            if e.version() != before && !env_swapped {
                env.follow(&Label::from_static("hotSwap"));
                env_swapped = true;
            }
            for c in cmds {
                env.follow(&c);
            }
        }
        swapper.join().unwrap();
        chatter.join().unwrap();
        e.tick();
        if e.version() == 1 && !env_swapped {
            env.follow(&Label::from_static("hotSwap"));
        }

        let log = e.log();
        swapped += (e.version() == 1) as usize;
        // inside the tick of the swap, every input comes before it
        if let Some(i) = log.iter().position(|r| r.dir == Dir::Swap) {
            let t = log[i].tick;
            assert!(log[i..].iter().filter(|r| r.tick == t).all(|r| !matches!(r.dir, Dir::In | Dir::Absorbed)));
        }
        let replay = quiescent_replay(log, &start, &swap);
        assert_eq!(log.iter().map(key).collect::<Vec<_>>(), replay.iter().map(key).collect::<Vec<_>>());
        assert!(log.iter().all(|r| r.dir != Dir::Fallback));
        assert!(accepted(&f.sol.combined, log), "{}", skyweave_enactor::log::render(log));
    }
    swapped
}
