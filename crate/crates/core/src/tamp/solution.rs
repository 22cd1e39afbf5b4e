use serde::{Deserialize, Serialize};

use crate::geometry::{Attachment, Config, Pose2, Scene};

use super::{Problem, RtEdge, TampError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAttachment {
    pub movable: String,
    pub parent: String,
    pub transform: Pose2,
}

impl StepAttachment {
    pub fn from_attachment(scene: &Scene, a: &Attachment) -> Self {
        StepAttachment {
            movable: scene.body(a.movable).id.clone(),
            parent: scene.parent_name(a.parent).to_string(),
            transform: a.transform,
        }
    }

    pub fn resolve(&self, scene: &Scene) -> Result<Attachment, TampError> {
        let movable = scene
            .body_id(&self.movable)
            .ok_or_else(|| TampError::Binding(format!("unknown body `{}`", self.movable)))?;
        let parent = scene
            .parent_by_name(&self.parent)
            .ok_or_else(|| TampError::Binding(format!("unknown parent `{}`", self.parent)))?;
        Ok(Attachment {
            movable,
            parent,
            transform: self.transform,
        })
    }
}

/// One solution step: a symbolic action, a mode switch (action plus
/// attachment plus the motion leading to it) or a plain motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachment: Option<StepAttachment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Config>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Solution {
    pub steps: Vec<SolutionStep>,
}

impl Solution {
    pub fn from_edges<'a>(problem: &Problem, edges: impl Iterator<Item = &'a RtEdge>) -> Self {
        let steps = edges
            .map(|e| match e {
                RtEdge::Symbolic(a) => SolutionStep {
                    action: Some(problem.task.action_name(*a)),
                    attachment: None,
                    trajectory: None,
                },
                RtEdge::ModeSwitch {
                    action,
                    attachment,
                    trajectory,
                } => SolutionStep {
                    action: Some(problem.task.action_name(*action)),
                    attachment: Some(StepAttachment::from_attachment(&problem.scene, attachment)),
                    trajectory: Some(trajectory.waypoints.clone()),
                },
                RtEdge::Motion(t) => SolutionStep {
                    action: None,
                    attachment: None,
                    trajectory: Some(t.waypoints.clone()),
                },
            })
            .collect();
        Solution { steps }
    }

    /// Symbolic actions in order.
    pub fn actions(&self) -> Vec<&str> {
        self.steps.iter().filter_map(|s| s.action.as_deref()).collect()
    }
}
