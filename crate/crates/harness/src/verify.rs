//! Exact from-scratch verifier. Everything is recomputed from the graph and
//! the published coloring, then diffed against the engine's own bookkeeping.

use std::collections::BTreeMap;
use std::fmt;

use dyncolor::decomposition::{AlmostClique, Invariant};
use dyncolor::dense::Slot;
use dyncolor::engine::Engine;
use dyncolor::oracle::{is_dense, is_friend, Commons};
use dyncolor::{Color, EngineMode, VertexId, BLANK};
use serde::{Deserialize, Serialize};

/// Every check the verifier runs, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Every vertex colored from the palette.
    Palette,
    /// No monochromatic edge.
    Properness,
    /// L(c) and L_D(c) agree with the color array.
    ColorLists,
    /// Clique pointers, non-edge lists, clique-neighbor counts; friend lists at phase starts.
    Structure,
    Density,
    Friendship,
    Size,
    Connectedness,
    /// |C| within [(1−4ε)Δ, (1+10ε)Δ].
    CliqueSize,
    /// |E̅_C(v)| ≤ 3c₃Δ.
    NonEdgeBound,
    /// At most two members per color, and two only for a matched pair.
    ColorUse,
    /// |A| = k + |M_N| + |U|.
    PaletteIdentity,
    /// M_N pairs are vertex-disjoint non-edges of one clique.
    Matching,
    /// |M_N| ≥ |E̅(C)|/(50εΔ), or /(22εΔ) at a phase start.
    MatchingFloor,
    /// T_C and heavy counts against a recount.
    EdgeCounts,
    /// Slots, A and 𝓛 against the members' colors and M_N.
    Books,
    /// Edges from any D ⊆ C to V∖C ≤ |D|k + 100|M_N|εΔ.
    EdgesOutside,
    /// Bad-color count and available vertex-color pairs.
    GoodColors,
}

impl Check {
    pub const ALL: [Check; 18] = [
        Check::Palette,
        Check::Properness,
        Check::ColorLists,
        Check::Structure,
        Check::Density,
        Check::Friendship,
        Check::Size,
        Check::Connectedness,
        Check::CliqueSize,
        Check::NonEdgeBound,
        Check::ColorUse,
        Check::PaletteIdentity,
        Check::Matching,
        Check::MatchingFloor,
        Check::EdgeCounts,
        Check::Books,
        Check::EdgesOutside,
        Check::GoodColors,
    ];

    /// The four decomposition invariants.
    pub const DECOMPOSITION: [Check; 4] = [Check::Density, Check::Friendship, Check::Size, Check::Connectedness];

    pub fn name(self) -> &'static str {
        match self {
            Check::Palette => "palette",
            Check::Properness => "properness",
            Check::ColorLists => "color-lists",
            Check::Structure => "structure",
            Check::Density => "density",
            Check::Friendship => "friendship",
            Check::Size => "size",
            Check::Connectedness => "connectedness",
            Check::CliqueSize => "clique-size",
            Check::NonEdgeBound => "non-edge-bound",
            Check::ColorUse => "color-use",
            Check::PaletteIdentity => "palette-identity",
            Check::Matching => "matching",
            Check::MatchingFloor => "matching-floor",
            Check::EdgeCounts => "edge-counts",
            Check::Books => "books",
            Check::EdgesOutside => "edges-outside",
            Check::GoodColors => "good-colors",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const TRANSCRIPT_CAP: usize = 8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub violations: u64,
    /// Violations that vanish when the scale is relaxed by τ, i.e. cases a
    /// sampled estimator cannot be expected to resolve.
    pub estimator_gaps: u64,
    pub transcript: Vec<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn fail(&mut self, msg: String) {
        self.violations += 1;
        if self.transcript.len() < TRANSCRIPT_CAP {
            self.transcript.push(msg);
        }
    }
}

/// Good-color measurements for one clique.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CliqueAudit {
    pub clique: u32,
    pub size: usize,
    pub matched: usize,
    pub non_edges: usize,
    pub free_members: usize,
    pub good_members: usize,
    pub bad_colors: usize,
    pub available_pairs: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n: usize,
    pub delta: usize,
    pub epsilon: f64,
    pub mode: Option<EngineMode>,
    pub phase: u64,
    pub updates: u64,
    pub at_phase_start: bool,
    pub checks: BTreeMap<Check, CheckResult>,
    pub audits: Vec<CliqueAudit>,
}

impl Report {
    pub fn get(&self, c: Check) -> &CheckResult {
        &self.checks[&c]
    }

    pub fn passed(&self, c: Check) -> bool {
        self.get(c).passed()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.values().all(CheckResult::passed)
    }

    pub fn failed(&self) -> Vec<Check> {
        self.checks.iter().filter(|(_, r)| !r.passed()).map(|(&c, _)| c).collect()
    }

    /// Decomposition violations not explained by an estimator gap.
    pub fn unexplained_decomposition_violations(&self) -> u64 {
        Check::DECOMPOSITION.iter().map(|&c| self.get(c).violations - self.get(c).estimator_gaps).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (c, r) in &self.checks {
            let status = if r.passed() { "ok" } else { "FAIL" };
            out.push_str(&format!("{:<17} {status:<4} violations={} gaps={}\n", c.name(), r.violations, r.estimator_gaps));
            for line in &r.transcript {
                out.push_str(&format!("    {line}\n"));
            }
        }
        out
    }
}

struct Scales {
    delta: f64,
    epsilon: f64,
    tau: f64,
    c3: f64,
    sparse: f64,
}

/// Runs every check against the engine's current state.
pub fn verify(engine: &Engine) -> Report {
    verify_selected(engine, &Check::ALL)
}

/// Runs only `selected`, skipping the work the others would need. The
/// report holds entries for the selected checks alone.
pub fn verify_selected(engine: &Engine, selected: &[Check]) -> Report {
    let want = |c: Check| selected.contains(&c);
    let g = engine.graph();
    let p = engine.params();
    let mut checks: BTreeMap<Check, CheckResult> = Check::ALL.iter().map(|&c| (c, CheckResult::default())).collect();
    let mut report = Report {
        n: engine.n(),
        delta: engine.delta(),
        epsilon: p.epsilon,
        mode: Some(engine.mode()),
        phase: engine.phase_index(),
        updates: engine.updates(),
        at_phase_start: engine.updates_in_phase() == 0,
        ..Default::default()
    };
    let colors = engine.colors();
    let palette = engine.delta() as Color + 1;

    if want(Check::Palette) {
        let ck = checks.get_mut(&Check::Palette).unwrap();
        for (v, &c) in colors.iter().enumerate() {
            if c == BLANK || c > palette {
                ck.fail(format!("vertex {v} has color {c}"));
            }
        }
    }
    if want(Check::Properness) {
        let ck = checks.get_mut(&Check::Properness).unwrap();
        for (u, v) in g.edges() {
            if colors[u as usize] == colors[v as usize] {
                ck.fail(format!("edge ({u}, {v}) is monochromatic with color {}", colors[u as usize]));
            }
        }
    }
    if want(Check::ColorLists) {
        if let Err(m) = engine.color_state().check_lists() {
            checks.get_mut(&Check::ColorLists).unwrap().fail(m);
        }
    }
    if engine.mode() == EngineMode::Baseline {
        checks.retain(|&c, _| want(c) && BASELINE_CHECKS.contains(&c));
        report.checks = checks;
        return report;
    }

    let decomp = engine.decomposition();
    let dense = engine.dense();
    let sc = Scales {
        delta: engine.delta() as f64,
        epsilon: p.epsilon,
        tau: p.tau,
        c3: p.c(3),
        sparse: p.epsilon - 0.75 * p.tau,
    };

    if want(Check::Structure) {
        let ck = checks.get_mut(&Check::Structure).unwrap();
        for v in decomp.check_structure(g) {
            ck.fail(format!("{:?}: {}", v.invariant, v.detail));
        }
        // Friend lists are refreshed only while replaying a phase, so they can
        // trail the graph by up to t updates inside a phase.
        if report.at_phase_start {
            if let Err(m) = decomp.friends.check_structure(g) {
                ck.fail(m);
            }
        }
    }

    let semantic = [Check::Density, Check::Friendship, Check::Size, Check::Connectedness];
    let commons = if semantic.iter().any(|&c| want(c)) { Some(Commons::compute(g)) } else { None };
    for viol in commons.as_ref().map(|cm| decomp.check_semantics(g, cm)).unwrap_or_default() {
        let commons = commons.as_ref().unwrap();
        let check = match viol.invariant {
            Invariant::Density => Check::Density,
            Invariant::Friendship => Check::Friendship,
            Invariant::Size => Check::Size,
            Invariant::Connectedness => Check::Connectedness,
            _ => Check::Structure,
        };
        let gap = estimator_gap(engine, commons, &sc, viol.invariant, viol.clique, viol.vertex);
        let ck = checks.get_mut(&check).unwrap();
        ck.fail(format!("{}{}", viol.detail, if gap { " (estimator gap)" } else { "" }));
        ck.estimator_gaps += gap as u64;
    }

    if want(Check::Matching) {
        if let Err(m) = dense.matching.check(decomp) {
            checks.get_mut(&Check::Matching).unwrap().fail(m);
        }
    }

    for cl in decomp.cliques() {
        let size = cl.len();
        let (lo, hi) = ((1.0 - 4.0 * sc.epsilon) * sc.delta, (1.0 + 10.0 * sc.epsilon) * sc.delta);
        if (size as f64) < lo || size as f64 > hi {
            checks.get_mut(&Check::CliqueSize).unwrap().fail(format!(
                "clique {} has size {size} outside [{lo:.1}, {hi:.1}]",
                cl.id
            ));
        }
        for v in cl.members().iter() {
            let ne = decomp.non_edges(v).len();
            if ne as f64 > 3.0 * sc.c3 * sc.delta {
                checks.get_mut(&Check::NonEdgeBound).unwrap().fail(format!(
                    "vertex {v} of clique {} has {ne} non-edges > {:.1}",
                    cl.id,
                    3.0 * sc.c3 * sc.delta
                ));
            }
        }
        clique_checks(engine, cl, &sc, report.at_phase_start, &want, &mut checks, &mut report.audits);
    }
    checks.retain(|&c, _| want(c));
    report.checks = checks;
    report
}

const BASELINE_CHECKS: &[Check] = &[Check::Palette, Check::Properness, Check::ColorLists];

fn clique_checks(
    engine: &Engine,
    cl: &AlmostClique,
    sc: &Scales,
    at_phase_start: bool,
    want: &dyn Fn(Check) -> bool,
    checks: &mut BTreeMap<Check, CheckResult>,
    audits: &mut Vec<CliqueAudit>,
) {
    let g = engine.graph();
    let decomp = engine.decomposition();
    let dense = engine.dense();
    let colors = engine.colors();
    let palette = engine.delta() as Color + 1;
    let id = cl.id;
    let members = cl.members().sorted();
    let size = members.len();
    let k = palette as i64 - size as i64;
    let matched = dense.matching.size(id);
    let non_edges = cl.non_edge_count();

    let Some(book) = dense.book(id) else {
        checks.get_mut(&Check::Books).unwrap().fail(format!("clique {id} has no color book"));
        return;
    };

    // Color use.
    let mut holders: Vec<Vec<VertexId>> = vec![Vec::new(); palette as usize + 1];
    for &v in &members {
        holders[colors[v as usize] as usize].push(v);
    }
    for (c, hs) in holders.iter().enumerate().skip(1) {
        let ok = match hs.len() {
            0 | 1 => true,
            2 => dense.matching.mate(hs[0]) == Some(hs[1]),
            _ => false,
        };
        if !ok {
            checks.get_mut(&Check::ColorUse).unwrap().fail(format!("clique {id}: color {c} held by {hs:?}"));
        }
    }

    // Palette identity with A read from the book.
    let uncolored: Vec<VertexId> = members.iter().copied().filter(|&v| colors[v as usize] == BLANK).collect();
    let u_count = uncolored.iter().filter(|&&v| dense.matching.mate(v).is_none()).count() as i64;
    let a = book.free_colors().len() as i64;
    if a != k + matched as i64 + u_count {
        checks.get_mut(&Check::PaletteIdentity).unwrap().fail(format!(
            "clique {id}: |A| = {a} but k + |M_N| + |U| = {k} + {matched} + {u_count}"
        ));
    }

    // Matching floor.
    let div = if at_phase_start { 22.0 } else { 50.0 };
    let floor = non_edges as f64 / (div * sc.epsilon * sc.delta);
    if (matched as f64) < floor {
        checks.get_mut(&Check::MatchingFloor).unwrap().fail(format!(
            "clique {id}: |M_N| = {matched} < |E̅(C)|/({div}εΔ) = {floor:.2}"
        ));
    }

    // T_C recount.
    if !(want(Check::EdgeCounts) || want(Check::Books) || want(Check::EdgesOutside) || want(Check::GoodColors)) {
        return;
    }
    let mut t = vec![0i64; palette as usize + 1];
    for &v in &members {
        for &w in g.neighbors(v) {
            if !decomp.is_dense(w) && colors[w as usize] != BLANK {
                t[colors[w as usize] as usize] += 1;
            }
        }
    }
    let ck = checks.get_mut(&Check::EdgeCounts).unwrap();
    let mut heavy = 0;
    for c in 1..=palette {
        if book.t(c) != t[c as usize] {
            ck.fail(format!("clique {id}: T_C({c}) = {} but recount gives {}", book.t(c), t[c as usize]));
        }
        heavy += (t[c as usize] as f64 > dense.heavy_threshold()) as usize;
    }
    if heavy != book.heavy_count() {
        ck.fail(format!("clique {id}: {} heavy colors recorded, {heavy} by recount", book.heavy_count()));
    }

    // Books against the members' colors.
    let ck = checks.get_mut(&Check::Books).unwrap();
    for c in 1..=palette {
        let hs = &holders[c as usize];
        let ok = match book.slot(c) {
            Slot::Free => hs.is_empty(),
            Slot::Single(x) => hs == &[x] || book.overflow().contains(x),
            Slot::Pair(a, b) => hs.len() == 2 && hs.contains(&a) && hs.contains(&b),
        };
        if !ok {
            ck.fail(format!("clique {id}: color {c} slot {:?} but held by {hs:?}", book.slot(c)));
        }
        if (book.slot(c) == Slot::Free) != book.free_colors().contains(c) {
            ck.fail(format!("clique {id}: color {c} free-set membership disagrees with its slot"));
        }
    }
    for &v in &members {
        if (dense.matching.mate(v).is_none()) != book.free_members().contains(v) {
            ck.fail(format!("clique {id}: vertex {v} 𝓛 membership disagrees with M_N"));
        }
    }

    // Outside-edge bound: the sum over v of max(0, out(v) − k) covers every D ⊆ C at once.
    let in_c = |w: VertexId| decomp.clique_of(w) == Some(id);
    let out: Vec<i64> = members.iter().map(|&v| g.neighbors(v).iter().filter(|&&w| !in_c(w)).count() as i64).collect();
    let excess: i64 = out.iter().map(|&o| (o - k).max(0)).sum();
    let bound = 100.0 * matched as f64 * sc.epsilon * sc.delta;
    if excess as f64 > bound {
        checks.get_mut(&Check::EdgesOutside).unwrap().fail(format!(
            "clique {id}: outside-edge excess {excess} > 100|M_N|εΔ = {bound:.1}"
        ));
    }

    if !want(Check::GoodColors) {
        return;
    }
    // Good-color bounds over 𝓛.
    let free: Vec<VertexId> = book.free_members().sorted();
    let tenth = sc.delta / 10.0;
    let blocked = |v: VertexId, c: Color| g.neighbors(v).iter().any(|&w| !in_c(w) && colors[w as usize] == c);
    let mut audit = CliqueAudit {
        clique: id,
        size,
        matched,
        non_edges,
        free_members: free.len(),
        ..Default::default()
    };
    let mut good_cache: BTreeMap<Color, bool> = BTreeMap::new();
    let mut good_members = Vec::new();
    for &v in &free {
        let c = colors[v as usize];
        if c == BLANK {
            continue;
        }
        let good = *good_cache
            .entry(c)
            .or_insert_with(|| free.iter().filter(|&&x| !blocked(x, c)).count() as f64 >= tenth);
        if good {
            good_members.push(v);
        } else {
            audit.bad_colors += 1;
        }
    }
    audit.good_members = good_members.len();
    let ck = checks.get_mut(&Check::GoodColors).unwrap();
    let lf = free.len() as f64;
    if lf > tenth {
        let e_out: i64 = members.iter().zip(&out).filter(|(v, _)| book.free_members().contains(**v)).map(|(_, &o)| o).sum();
        let cap = e_out as f64 / (lf - tenth);
        if audit.bad_colors as f64 > cap + 1e-9 {
            ck.fail(format!("clique {id}: {} bad colors exceed e(𝓛, V∖C)/(|𝓛| − Δ/10) = {cap:.2}", audit.bad_colors));
        }
    }
    let a_colors = book.free_colors().sorted();
    audit.available_pairs =
        good_members.iter().map(|&u| a_colors.iter().filter(|&&c| !blocked(u, c)).count() as u64).sum();
    let need = good_members.len() as f64 * (matched as f64 + u_count as f64) - 100.0 * sc.epsilon * sc.delta * matched as f64;
    if (audit.available_pairs as f64) < need {
        ck.fail(format!(
            "clique {id}: {} available (𝓛_G, A) pairs < |𝓛_G|(|M_N| + |U|) − 100εΔ|M_N| = {need:.1}",
            audit.available_pairs
        ));
    }
    audits.push(audit);
}

/// Whether a decomposition violation is down to the sampled friend state:
/// either it disappears once its scale is relaxed by τ (while that still
/// means something, i.e. the relaxed scale is below 1), or the tracker lists
/// a friend of an involved vertex that the exact counts reject.
fn estimator_gap(
    engine: &Engine,
    commons: &Commons,
    sc: &Scales,
    inv: Invariant,
    clique: Option<u32>,
    vertex: Option<VertexId>,
) -> bool {
    let decomp = engine.decomposition();
    let cl = clique.and_then(|c| decomp.clique(c));
    let misled = match (vertex, cl) {
        (Some(v), _) => misled(engine, commons, sc, v),
        (None, Some(cl)) => cl.members().iter().any(|v| misled(engine, commons, sc, v)),
        _ => false,
    };
    misled || relaxation_clears(engine, commons, sc, inv, cl, vertex)
}

/// A friend list entry at scale i whose pair is not even an (iε + τ)-friend.
fn misled(engine: &Engine, commons: &Commons, sc: &Scales, v: VertexId) -> bool {
    let friends = &engine.decomposition().friends;
    [1usize, 3].into_iter().any(|i| {
        let x = i as f64 * sc.epsilon + sc.tau;
        friends.friends(i, v).iter().any(|u| !is_friend(commons.get(u, v), engine.delta(), x))
    })
}

fn relaxation_clears(
    engine: &Engine,
    commons: &Commons,
    sc: &Scales,
    inv: Invariant,
    cl: Option<&AlmostClique>,
    vertex: Option<VertexId>,
) -> bool {
    let g = engine.graph();
    let decomp = engine.decomposition();
    let relaxed = sc.c3 + sc.tau;
    if relaxed >= 1.0 {
        return false;
    }
    match (inv, vertex) {
        (Invariant::Density, Some(v)) if decomp.is_dense(v) => is_dense(g, commons, v, relaxed),
        (Invariant::Density, Some(v)) => !is_dense(g, commons, v, (sc.sparse - sc.tau).max(0.0)),
        (Invariant::Friendship, Some(v)) => {
            let Some(cl) = cl else { return false };
            let friends = g
                .neighbors(v)
                .iter()
                .filter(|&&u| {
                    (decomp.clique_of(u) == Some(cl.id) || cl.ever_member(u))
                        && is_friend(commons.get(u, v), engine.delta(), relaxed)
                })
                .count();
            friends as f64 >= (1.0 - relaxed) * sc.delta
        }
        (Invariant::Size, _) => {
            let Some(cl) = cl else { return false };
            let s = cl.len() as f64;
            s >= (1.0 - relaxed) * sc.delta && s <= (1.0 + 3.0 * relaxed) * sc.delta
        }
        (Invariant::Connectedness, _) => {
            let Some(cl) = cl else { return false };
            friend_connected(engine, commons, cl, relaxed)
        }
        _ => false,
    }
}

fn friend_connected(engine: &Engine, commons: &Commons, cl: &AlmostClique, x: f64) -> bool {
    let g = engine.graph();
    let decomp = engine.decomposition();
    let Some(start) = cl.members().iter().next() else { return true };
    let mut seen = vec![false; g.n()];
    seen[start as usize] = true;
    let mut reached = 1;
    let mut stack = vec![start];
    while let Some(a) = stack.pop() {
        for &b in g.neighbors(a) {
            if decomp.clique_of(b) == Some(cl.id) && !seen[b as usize] && is_friend(commons.get(a, b), engine.delta(), x) {
                seen[b as usize] = true;
                reached += 1;
                stack.push(b);
            }
        }
    }
    reached == cl.len()
}
