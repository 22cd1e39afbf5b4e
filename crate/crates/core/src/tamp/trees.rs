use std::collections::HashMap;

use crate::geometry::Attachment;
use crate::motion::Trajectory;
use crate::symbolic::{AbstractState, ActionId};

use super::HybridState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RtId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArtId(pub usize);

/// How an RT node was reached from its parent.
#[derive(Debug, Clone, PartialEq)]
pub enum RtEdge {
    /// Non-geometric action: only the abstract state changes.
    Symbolic(ActionId),
    /// Motion in the parent's mode, then a switch to `attachment` at the
    /// trajectory's last configuration.
    ModeSwitch {
        action: ActionId,
        attachment: Attachment,
        trajectory: Trajectory,
    },
    /// Motion within one mode, no symbolic change.
    Motion(Trajectory),
}

#[derive(Debug, Clone)]
pub struct RtNode {
    pub state: HybridState,
    pub parent: Option<(RtId, RtEdge)>,
}

/// Reachability tree over hybrid states.
#[derive(Debug, Clone)]
pub struct ReachabilityTree {
    nodes: Vec<RtNode>,
    pub solution: Option<RtId>,
}

impl ReachabilityTree {
    pub fn new(root: HybridState) -> Self {
        ReachabilityTree {
            nodes: vec![RtNode { state: root, parent: None }],
            solution: None,
        }
    }

    pub fn root(&self) -> RtId {
        RtId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: RtId) -> &RtNode {
        &self.nodes[id.0]
    }

    pub fn add(&mut self, state: HybridState, parent: RtId, edge: RtEdge) -> RtId {
        self.nodes.push(RtNode {
            state,
            parent: Some((parent, edge)),
        });
        RtId(self.nodes.len() - 1)
    }

    /// Node ids from the root to `id`, inclusive.
    pub fn path_to(&self, id: RtId) -> Vec<RtId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some((p, _)) = &self.nodes[cur.0].parent {
            out.push(*p);
            cur = *p;
        }
        out.reverse();
        out
    }
}

#[derive(Debug, Clone)]
pub struct ArtNode {
    pub state: AbstractState,
    pub parent: Option<ArtId>,
    /// Children in creation order, keyed by the action leading to them.
    pub children: Vec<(ActionId, ArtId)>,
    pub n_visit: u32,
    pub r_total: f64,
    /// RT nodes whose abstract state is `state`.
    pub v_s: Vec<RtId>,
    pub terminate_prob: f64,
    /// The symbolic planner proved the goal unreachable from here.
    pub dead: bool,
    pub(crate) applicable: Option<Vec<ActionId>>,
}

impl ArtNode {
    /// Mean reward; unvisited nodes rank above everything.
    pub fn value(&self) -> f64 {
        if self.n_visit == 0 {
            f64::INFINITY
        } else {
            self.r_total / self.n_visit as f64
        }
    }

    pub fn child(&self, a: ActionId) -> Option<ArtId> {
        self.children.iter().find(|(b, _)| *b == a).map(|&(_, c)| c)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Abstract reachability tree carrying the search statistics.
#[derive(Debug, Clone)]
pub struct AbstractTree {
    nodes: Vec<ArtNode>,
    terminate_prob: f64,
    /// First node created for each abstract state, for lookups by state.
    by_state: HashMap<AbstractState, Vec<ArtId>>,
}

impl AbstractTree {
    pub fn new(root: AbstractState, root_rt: RtId, terminate_prob: f64) -> Self {
        let mut t = AbstractTree {
            nodes: Vec::new(),
            terminate_prob,
            by_state: HashMap::new(),
        };
        let r = t.push(root, None);
        t.nodes[r.0].v_s.push(root_rt);
        t
    }

    fn push(&mut self, state: AbstractState, parent: Option<ArtId>) -> ArtId {
        let id = ArtId(self.nodes.len());
        self.by_state.entry(state.clone()).or_default().push(id);
        self.nodes.push(ArtNode {
            state,
            parent,
            children: Vec::new(),
            n_visit: 0,
            r_total: 0.0,
            v_s: Vec::new(),
            terminate_prob: self.terminate_prob,
            dead: false,
            applicable: None,
        });
        id
    }

    pub fn root(&self) -> ArtId {
        ArtId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: ArtId) -> &ArtNode {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: ArtId) -> &mut ArtNode {
        &mut self.nodes[id.0]
    }

    pub fn nodes_with_state(&self, s: &AbstractState) -> &[ArtId] {
        self.by_state.get(s).map_or(&[], Vec::as_slice)
    }

    /// Child of `parent` via `action`, created with state `next` if absent.
    pub fn child_or_insert(&mut self, parent: ArtId, action: ActionId, next: impl FnOnce() -> AbstractState) -> ArtId {
        if let Some(c) = self.nodes[parent.0].child(action) {
            return c;
        }
        let c = self.push(next(), Some(parent));
        self.nodes[parent.0].children.push((action, c));
        c
    }

    /// Nodes along `actions` starting at `from`, inclusive of `from`;
    /// `None` if some action has no child yet.
    pub fn follow(&self, from: ArtId, actions: &[ActionId]) -> Option<Vec<ArtId>> {
        let mut out = vec![from];
        let mut cur = from;
        for &a in actions {
            cur = self.nodes[cur.0].child(a)?;
            out.push(cur);
        }
        Some(out)
    }

    /// Actions from the root to `id`.
    pub fn actions_to(&self, id: ArtId) -> Vec<ActionId> {
        let mut out = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur.0].parent {
            let a = self.nodes[p.0]
                .children
                .iter()
                .find(|(_, c)| *c == cur)
                .map(|&(a, _)| a)
                .expect("child listed under its parent");
            out.push(a);
            cur = p;
        }
        out.reverse();
        out
    }
}
