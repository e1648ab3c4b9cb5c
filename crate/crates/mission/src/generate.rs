//! Specification generators for grid missions too large to write by hand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

/// A patrol workspace: a grid with blocked cells and named regions. The
/// regions `A1`, `B1`, `C1`, `D1`, `NoF1` and `NoF2` are expected.
#[derive(Clone, Debug)]
pub struct PatrolLayout {
    pub rows: u32,
    pub cols: u32,
    pub init: u32,
    pub blocked: Vec<u32>,
    pub regions: BTreeMap<String, Vec<u32>>,
    /// Start parked and take off first.
    pub takeoff: bool,
}

impl PatrolLayout {
    pub fn cells(&self) -> Vec<u32> {
        let blocked: BTreeSet<u32> = self.blocked.iter().copied().collect();
        (0..self.rows * self.cols).filter(|c| !blocked.contains(c)).collect()
    }

    /// Desk-scale 6x6 patrol.
    pub fn desk() -> PatrolLayout {
        let regions = [("A1", vec![0]), ("B1", vec![5]), ("C1", vec![30]), ("D1", vec![35]), ("NoF1", vec![2, 3, 8, 9]), ("NoF2", vec![26, 27, 32, 33])];
        PatrolLayout {
            rows: 6,
            cols: 6,
            init: 0,
            blocked: Vec::new(),
            regions: regions.into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
            takeoff: true,
        }
    }

    /// 13x13 patrol with a six-cell building in the middle row: 163 cells.
    pub fn large() -> PatrolLayout {
        let block = |rows: std::ops::Range<u32>, cols: std::ops::Range<u32>| -> Vec<u32> {
            rows.flat_map(|r| cols.clone().map(move |c| r * 13 + c)).collect()
        };
        let regions = [
            ("A1", vec![14]),
            ("B1", vec![24]),
            ("C1", vec![144]),
            ("D1", vec![154]),
            ("NoF1", block(0..4, 5..8)),
            ("NoF2", block(9..13, 5..8)),
        ];
        PatrolLayout {
            rows: 13,
            cols: 13,
            init: 14,
            blocked: block(6..7, 4..10),
            regions: regions.into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
            takeoff: false,
        }
    }
}

fn set(prefix: &str, cells: &[u32]) -> String {
    let v: Vec<String> = cells.iter().map(|c| format!("{prefix}.{c}")).collect();
    format!("{{{}}}", v.join(", "))
}

fn movement(out: &mut String, rows: u32, cols: u32, init: u32, blocked: &[u32], cells: &[u32], takeoff: bool) {
    if blocked.is_empty() {
        let _ = writeln!(out, "Move = grid({rows}, {cols}, {init}).");
    } else {
        let b: Vec<String> = blocked.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "Move = grid({rows}, {cols}, {init}, {{{}}}).", b.join(", "));
    }
    let _ = writeln!(out, "set Go = {}.", set("go", cells));
    let _ = writeln!(out, "set At = {}.", set("at", cells));
    if takeoff {
        let _ = writeln!(out, "Cap = (takeOff -> takeOff.end -> Fly),\n  Fly = ({} -> Arrive),\n  Arrive = ({} -> Fly).", set("go", cells), set("at", cells));
        let _ = writeln!(out, "||Env = (Move || Cap).");
    }
}

fn region_fluent(out: &mut String, name: &str, cells: &[u32], init: u32) {
    let init = if cells.contains(&init) { ", init true" } else { "" };
    let _ = writeln!(out, "fluent at{name} = <{}, At \\ {}{init}>.", set("at", cells), set("at", cells));
}

/// Patrol A1/B1 avoiding NoF1, updated to patrol C1/D1 avoiding NoF2; in
/// between, neither no-fly zone may be entered.
pub fn patrol_update_spec(l: &PatrolLayout) -> String {
    let cells = l.cells();
    let mut s = String::new();
    let _ = writeln!(s, "// Generated {}x{} patrol, {} cells.", l.rows, l.cols, cells.len());
    movement(&mut s, l.rows, l.cols, l.init, &l.blocked, &cells, l.takeoff);
    let env = if l.takeoff { "Env" } else { "Move" };
    let mut ctl: Vec<String> = cells.iter().map(|c| format!("go.{c}")).collect();
    if l.takeoff {
        ctl.insert(0, "takeOff".into());
    }
    let _ = writeln!(s, "controllable = {{{}}}.", ctl.join(", "));
    for (name, c) in &l.regions {
        region_fluent(&mut s, name, c, l.init);
    }
    let _ = writeln!(
        s,
        "assert safety AvoidOld = [](!atNoF1).\n\
         assert safety AvoidNew = [](!atNoF2).\n\
         assert safety Between = [](OldStopped && !NewStarted -> !atNoF1 && !atNoF2).\n\
         liveness OldGoal = gr1( |- []<>(atA1), []<>(atB1)).\n\
         liveness NewGoal = gr1( |- []<>(atC1), []<>(atD1)).\n\
         problem control Old {{ env = {env}; safety = AvoidOld; liveness = OldGoal; }}\n\
         problem control New {{ env = {env}; safety = AvoidNew; liveness = NewGoal; }}\n\
         problem update Switch {{ old = Old; new = New; theta = Between; }}"
    );
    s
}

/// Search and rescue on a `rows x cols` grid. The old mission patrols the
/// two far corners at high altitude; the new one flies low with a camera
/// and processes an image in every cell before moving on. Between the two,
/// only altitude changes are allowed.
pub fn search_rescue_spec(rows: u32, cols: u32) -> String {
    let n = rows * cols;
    let cells: Vec<u32> = (0..n).collect();
    let mut s = String::new();
    let _ = writeln!(s, "// Generated {rows}x{cols} search and rescue.");
    movement(&mut s, rows, cols, 0, &[], &cells, false);
    let _ = writeln!(
        s,
        "Alt = (low.height -> Alt | high.height -> Alt).\n\
         Camera = (sense.person -> Result),\n  Result = (found -> Camera | not.found -> Camera).\n\
         ||Env = (Move || Alt).\n\
         ||Env2 = (Move || Alt || Camera).\n\
         controllable = {{go[i:0..{}], low.height, high.height, sense.person}}.",
        n - 1
    );
    let far = n - 1;
    let _ = writeln!(
        s,
        "fluent at0 = <{{at.0}}, At \\ {{at.0}}, init true>.\n\
         fluent at{far} = <{{at.{far}}}, At \\ {{at.{far}}}>.\n\
         fluent atS1 = <{{at.{}}}, At \\ {{at.{}}}>.\n\
         fluent atS2 = <{{at.{}}}, At \\ {{at.{}}}>.\n\
         fluent Moving = <Go, At>.\n\
         fluent High = <{{high.height}}, {{low.height}}, init true>.\n\
         fluent Processed = <{{found, not.found}}, At>.",
        cols - 1,
        cols - 1,
        n - cols,
        n - cols
    );
    let quiet: Vec<String> = cells.iter().map(|c| format!("go.{c}")).chain(["sense.person".to_string()]).collect();
    let _ = writeln!(
        s,
        "assert safety Spot = [](Moving -> High).\n\
         assert safety Scan = []((Moving -> !High) && (Moving -> Processed) && (sense.person -> !Moving)).\n\
         assert safety Quiet = [](OldStopped && !NewStarted -> !({})).\n\
         liveness Watch = gr1( |- []<>(at0), []<>(at{far})).\n\
         liveness Search = gr1( |- []<>(atS1), []<>(atS2)).\n\
         problem control Old {{ env = Env; safety = Spot; liveness = Watch; }}\n\
         problem control New {{ env = Env2; safety = Scan; liveness = Search; }}\n\
         problem update Descend {{ old = Old; new = New; theta = Quiet; }}",
        quiet.join(" || ")
    );
    s
}
