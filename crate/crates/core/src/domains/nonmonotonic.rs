use std::collections::BTreeMap;

use crate::geometry::{ArmModel, Body, Pose2, Scene, Shape};
use crate::symbolic::{task_plan, PlannerConfig};
use crate::tamp::{SearchParams, Solver, TampError};

use super::{assemble, body_id, check_m, slot, surface, translation, BenchmarkInstance, DomainError, DomainKind};

pub const NONMONOTONIC_DOMAIN: &str = r#"(define (domain nonmonotonic)
  (:requirements :strips :typing)
  (:types block blocker - movable movable surface robot - object)
  (:constants robot - robot)
  (:predicates (attached ?m - movable ?p - object) (handempty))
  (:action pick
    :parameters (?b - movable ?s - surface)
    :precondition (and (attached ?b ?s) (handempty))
    :effect (and (attached ?b robot) (not (attached ?b ?s)) (not (handempty))))
  (:action place
    :parameters (?b - movable ?s - surface)
    :precondition (attached ?b robot)
    :effect (and (attached ?b ?s) (not (attached ?b robot)) (handempty))))
"#;

/// Attempts at realizing the blocker-ignoring plan made at generation.
const DIRECT_ATTEMPTS: u64 = 50;

const BLOCK: (f64, f64) = (0.1, 0.12);
const BLOCKER: (f64, f64) = (0.1, 0.25);
const GAP: f64 = 0.01;

/// Rectangle spanning `u0..u1` along the outward direction `side`.
fn outward_rect(side: f64, u0: f64, u1: f64, y0: f64, y1: f64) -> Shape {
    let (a, b) = (side * u0, side * u1);
    Shape::rect_from(a.min(b), y0, a.max(b), y1)
}

/// `m` colored blocks, each in a niche closed by a back wall and a low
/// shelf, with a taller blocker standing right in front of it. Every
/// grasp of a colored block is obstructed until its blocker is moved,
/// which the symbolic model does not know about.
pub fn build_nonmonotonic(m: usize, seed: u64) -> Result<BenchmarkInstance, DomainError> {
    check_m(DomainKind::Nonmonotonic, m)?;
    let mut bodies = vec![surface("storage", 0.55)];
    let mut poses = BTreeMap::new();
    poses.insert("storage".to_string(), translation(0.0, -1.5));
    for i in 1..=m {
        let side = if i % 2 == 1 { 1.0 } else { -1.0 };
        let (xc, yt) = (side * 1.7, -0.6);
        let table = Body::new(format!("table{i}"), outward_rect(side, -0.35, 0.16, -0.05, 0.0), false).with_top_region();
        let u_wall = BLOCK.0 / 2.0 + GAP;
        let wall = Body::new(format!("wall{i}"), outward_rect(side, u_wall, u_wall + 0.05, 0.0, 0.3), false);
        let shelf_y = BLOCK.1 + GAP;
        let shelf = Body::new(
            format!("shelf{i}"),
            outward_rect(side, -BLOCK.0 / 2.0 - GAP / 2.0, u_wall + 0.05, shelf_y, shelf_y + 0.05),
            false,
        );
        for b in [table, wall, shelf] {
            poses.insert(b.id.clone(), translation(xc, yt));
            bodies.push(b);
        }
        bodies.push(surface(&format!("patch{i}"), 0.12));
        poses.insert(format!("patch{i}"), translation(side * 0.75, -1.0));
        bodies.push(Body::new(format!("c{i}"), Shape::rect(BLOCK.0, BLOCK.1), true));
        bodies.push(Body::new(format!("k{i}"), Shape::rect(BLOCKER.0, BLOCKER.1), true));
    }
    let scene = Scene::new(bodies, ArmModel::default(), poses).map_err(TampError::from)?;

    let mut init = Vec::new();
    let mut goal_attachments = Vec::new();
    for i in 1..=m {
        let side = if i % 2 == 1 { 1.0 } else { -1.0 };
        let table = body_id(&scene, &format!("table{i}"));
        for (name, u) in [(format!("c{i}"), 0.0), (format!("k{i}"), -(BLOCK.0 + BLOCKER.0) / 2.0 - GAP)] {
            let b = body_id(&scene, &name);
            init.push(crate::geometry::Attachment {
                movable: b,
                parent: crate::geometry::Parent::Body(table),
                transform: Pose2::translation(side * u, scene.body(b).rest_offset()),
            });
        }
        goal_attachments.push(slot(&scene, &format!("c{i}"), &format!("patch{i}"), 0));
    }

    let ids = |p: &str| (1..=m).map(|i| format!("{p}{i}")).collect::<Vec<_>>().join(" ");
    let init_atoms: String = (1..=m).map(|i| format!(" (attached c{i} table{i}) (attached k{i} table{i})")).collect();
    let goal: String = (1..=m).map(|i| format!(" (attached c{i} patch{i})")).collect();
    let problem_text = format!(
        "(define (problem nonmonotonic-{m}) (:domain nonmonotonic)\n  (:objects {} - block {} - blocker {} {} storage - surface)\n  (:init (handempty){init_atoms})\n  (:goal (and{goal})))\n",
        ids("c"),
        ids("k"),
        ids("table"),
        ids("patch"),
    );
    let inst = assemble(DomainKind::Nonmonotonic, m, seed, NONMONOTONIC_DOMAIN, problem_text, scene, init, goal_attachments)?;
    let direct = direct_plan_successes(&inst, DIRECT_ATTEMPTS)?;
    if direct > 0 {
        return Err(DomainError::SelfCheck(format!("{direct} direct plans succeeded despite the blockers")));
    }
    Ok(inst)
}

/// Seeded attempts at geometrically realizing the shortest abstract plan
/// from the initial state; returns how many reached the goal.
pub fn direct_plan_successes(inst: &BenchmarkInstance, attempts: u64) -> Result<usize, DomainError> {
    let p = &inst.problem;
    let plan = task_plan(&p.task, &p.init.s, &p.goal.atoms, &PlannerConfig::default())
        .map_err(|e| DomainError::SelfCheck(e.to_string()))?;
    let mut solved = 0;
    for seed in 0..attempts {
        let mut solver = Solver::new(p, &SearchParams { seed, ..Default::default() })?;
        let root = solver.art.root();
        let nodes = solver.extend_art(root, &plan);
        if solver.ss_layer(&plan, &nodes)?.solved {
            solved += 1;
        }
    }
    Ok(solved)
}
