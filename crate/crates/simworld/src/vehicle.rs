use serde::{Deserialize, Serialize};
use skyweave_lts::Label;

use crate::geom::Point;
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Metres per second.
    pub speed: f64,
    /// Percent per airborne second.
    pub drain: f64,
    /// Crossing this level downwards emits `low.bat`.
    pub low_battery: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams { speed: 5.0, drain: 0.05, low_battery: 20.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub pos: Point,
    pub alt: f64,
    pub speed: f64,
    pub flying: bool,
    pub target: Option<u32>,
    pub battery: f64,
}

impl VehicleState {
    pub fn parked(pos: Point) -> VehicleState {
        VehicleState { pos, alt: 0.0, speed: 0.0, flying: false, target: None, battery: 100.0 }
    }
}

/// Advances the vehicle by `dt` seconds. Returns the new state, the cell
/// reached if any, and `low.bat` when the battery crosses the threshold.
pub fn vehicle_tick(v: &VehicleState, dt: f64, grid: &Grid, params: &VehicleParams) -> (VehicleState, Option<u32>, Vec<Label>) {
    let mut n = v.clone();
    let mut events = Vec::new();
    let mut arrived = None;
    if let Some(t) = v.target {
        let goal = grid.centre(t);
        let d = v.pos.dist(goal);
        let step = params.speed * dt;
        n.speed = params.speed;
        if d <= step {
            n.pos = goal;
        } else {
            let k = step / d;
            n.pos = Point::new(v.pos.x + (goal.x - v.pos.x) * k, v.pos.y + (goal.y - v.pos.y) * k);
        }
        if n.pos.dist(goal) < grid.arrival_threshold().min(step.max(f64::EPSILON)) {
            n.target = None;
            n.speed = 0.0;
            arrived = Some(t);
            events.push(Label::new(&format!("at.{t}")).expect("label"));
        }
    }
    if v.flying {
        n.battery = (v.battery - params.drain * dt).max(0.0);
        if v.battery >= params.low_battery && n.battery < params.low_battery {
            events.push(Label::from_static("low.bat"));
        }
    }
    (n, arrived, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(Point::default(), 10.0, 1, 3, 0.0).unwrap()
    }

    #[test]
    fn arrival_time_closed_form() {
        let g = grid();
        let p = VehicleParams { speed: 5.0, drain: 0.0, low_battery: 20.0 };
        let mut v = VehicleState { flying: true, target: Some(1), ..VehicleState::parked(g.centre(0)) };
        let dt = 0.1;
        let mut t = 0.0;
        loop {
            let (n, arrived, ev) = vehicle_tick(&v, dt, &g, &p);
            t += dt;
            v = n;
            if arrived.is_some() {
                assert_eq!(ev[0].as_str(), "at.1");
                break;
            }
            assert!(t < 5.0);
        }
        assert!((t - 2.0).abs() <= dt + 1e-9, "{t}");
        assert_eq!(g.cell_of(v.pos), Some(1));
    }

    #[test]
    fn idle_vehicle_stays_put() {
        let g = grid();
        let v = VehicleState::parked(g.centre(2));
        let (n, arrived, ev) = vehicle_tick(&v, 1.0, &g, &VehicleParams::default());
        assert_eq!(n.pos, v.pos);
        assert!(arrived.is_none() && ev.is_empty());
    }

    #[test]
    fn low_battery_once() {
        let g = grid();
        let p = VehicleParams { speed: 1.0, drain: 0.1, low_battery: 20.0 };
        let mut v = VehicleState { flying: true, battery: 20.1, ..VehicleState::parked(g.centre(0)) };
        let mut lows = 0;
        for _ in 0..10 {
            let (n, _, ev) = vehicle_tick(&v, 1.0, &g, &p);
            lows += ev.iter().filter(|l| l.as_str() == "low.bat").count();
            v = n;
        }
        assert_eq!(lows, 1);
        assert!(v.battery >= 0.0);
    }
}
