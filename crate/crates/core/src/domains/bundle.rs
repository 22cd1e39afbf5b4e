use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{Config, Mode, Scene};
use crate::symbolic::load_task;
use crate::tamp::{GoalSpec, Problem, StepAttachment, TampError};

use super::{BenchmarkInstance, DomainError, DomainKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub kind: DomainKind,
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitFile {
    pub attachments: Vec<StepAttachment>,
    pub q: Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalFile {
    pub atoms: Vec<String>,
    #[serde(default)]
    pub attachments: Vec<StepAttachment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Config>,
}

const FILES: [&str; 6] = ["instance.json", "domain.pddl", "problem.pddl", "scene.json", "init.json", "goal.json"];

/// Writes the instance as a directory of plain files.
pub fn write_bundle(inst: &BenchmarkInstance, dir: &Path) -> Result<(), DomainError> {
    fs::create_dir_all(dir)?;
    let p = &inst.problem;
    let meta = InstanceMeta {
        kind: inst.kind,
        m: inst.m,
        seed: inst.seed,
    };
    let init = InitFile {
        attachments: p.init.sigma.attachments().iter().map(|a| StepAttachment::from_attachment(&p.scene, a)).collect(),
        q: p.init.q,
    };
    let goal = GoalFile {
        atoms: p.goal.atoms.iter().map(|&f| p.task.fact_name(f)).collect(),
        attachments: p.goal.attachments.iter().map(|a| StepAttachment::from_attachment(&p.scene, a)).collect(),
        q: p.goal.q,
    };
    let contents = [
        serde_json::to_string_pretty(&meta)?,
        inst.domain_text.clone(),
        inst.problem_text.clone(),
        serde_json::to_string_pretty(&p.scene)?,
        serde_json::to_string_pretty(&init)?,
        serde_json::to_string_pretty(&goal)?,
    ];
    for (name, text) in FILES.iter().zip(contents) {
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<BenchmarkInstance, DomainError> {
    let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| DomainError::Bundle(format!("{name}: {e}")));
    let meta: InstanceMeta = serde_json::from_str(&read(FILES[0])?)?;
    let domain_text = read(FILES[1])?;
    let problem_text = read(FILES[2])?;
    let scene: Scene = serde_json::from_str(&read(FILES[3])?)?;
    let init: InitFile = serde_json::from_str(&read(FILES[4])?)?;
    let goal: GoalFile = serde_json::from_str(&read(FILES[5])?)?;
    let task = load_task(&domain_text, &problem_text)?;
    let resolve = |atts: &[StepAttachment]| atts.iter().map(|a| a.resolve(&scene)).collect::<Result<Vec<_>, TampError>>();
    let mode = Mode::new(&scene, resolve(&init.attachments)?).map_err(TampError::from)?;
    let atoms = goal.atoms.iter().map(|a| task.parse_fact(a)).collect::<Result<Vec<_>, _>>()?;
    let spec = GoalSpec {
        atoms,
        attachments: resolve(&goal.attachments)?,
        q: goal.q,
    };
    let problem = Problem::new(task, scene, mode, init.q, spec)?;
    Ok(BenchmarkInstance {
        kind: meta.kind,
        m: meta.m,
        seed: meta.seed,
        domain_text,
        problem_text,
        problem,
    })
}
