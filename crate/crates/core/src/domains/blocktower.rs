use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{ArmModel, Attachment, Body, Scene, Shape};
use crate::tamp::TampError;

use super::{assemble, check_m, slot, surface, translation, BenchmarkInstance, DomainError, DomainKind};

pub const BLOCKTOWER_DOMAIN: &str = r#"(define (domain blocktower)
  (:requirements :strips :typing)
  (:types block plate robot - object)
  (:constants robot - robot)
  (:predicates (attached ?m - block ?p - object) (clear ?b - block) (handempty))
  (:action pick
    :parameters (?b - block ?p - plate)
    :precondition (and (attached ?b ?p) (clear ?b) (handempty))
    :effect (and (attached ?b robot) (not (attached ?b ?p)) (not (clear ?b)) (not (handempty))))
  (:action place
    :parameters (?b - block ?p - plate)
    :precondition (attached ?b robot)
    :effect (and (attached ?b ?p) (not (attached ?b robot)) (clear ?b) (handempty)))
  (:action unstack
    :parameters (?b - block ?c - block)
    :precondition (and (attached ?b ?c) (clear ?b) (handempty))
    :effect (and (attached ?b robot) (not (attached ?b ?c)) (clear ?c) (not (clear ?b)) (not (handempty))))
  (:action stack
    :parameters (?b - block ?c - block)
    :precondition (and (attached ?b robot) (clear ?c))
    :effect (and (attached ?b ?c) (not (attached ?b robot)) (not (clear ?c)) (clear ?b) (handempty))))
"#;

const BLOCK: f64 = 0.1;
const PLATE: f64 = 0.35;

/// `m` blocks in two random stacks on the side plates, to be rebuilt as
/// the tower `b1` on `b2` on ... on `bm` on the center plate.
pub fn build_blocktower(m: usize, seed: u64) -> Result<BenchmarkInstance, DomainError> {
    check_m(DomainKind::Blocktower, m)?;
    let mut bodies = vec![surface("left", PLATE), surface("center", PLATE), surface("right", PLATE)];
    let names: Vec<String> = (1..=m).map(|i| format!("b{i}")).collect();
    bodies.extend(names.iter().map(|b| Body::new(b.as_str(), Shape::rect(BLOCK, BLOCK), true).with_top_region()));
    let mut poses = BTreeMap::new();
    poses.insert("left".to_string(), translation(-1.2, -0.6));
    poses.insert("center".to_string(), translation(0.0, -1.6));
    poses.insert("right".to_string(), translation(1.2, -0.6));
    let scene = Scene::new(bodies, ArmModel::default(), poses).map_err(TampError::from)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = names.clone();
    order.shuffle(&mut rng);
    let split = rng.gen_range(0..=m);
    let mut init = Vec::new();
    let mut atoms = String::new();
    for (plate, stack) in [("left", &order[..split]), ("right", &order[split..])] {
        for (k, b) in stack.iter().enumerate() {
            if k == 0 {
                init.push(slot(&scene, b, plate, 1));
                atoms += &format!(" (attached {b} {plate})");
            } else {
                init.push(slot(&scene, b, &stack[k - 1], 0));
                atoms += &format!(" (attached {b} {})", stack[k - 1]);
            }
        }
        if let Some(top) = stack.last() {
            atoms += &format!(" (clear {top})");
        }
    }

    let mut goal_attachments: Vec<Attachment> = (0..m - 1).map(|i| slot(&scene, &names[i], &names[i + 1], 0)).collect();
    goal_attachments.push(slot(&scene, &names[m - 1], "center", 1));
    let goal: String = goal_attachments
        .iter()
        .map(|a| format!(" (attached {} {})", scene.body(a.movable).id, scene.parent_name(a.parent)))
        .collect();
    let problem_text = format!(
        "(define (problem blocktower-{m}) (:domain blocktower)\n  (:objects {} - block left center right - plate)\n  (:init (handempty){atoms})\n  (:goal (and{goal})))\n",
        names.join(" ")
    );
    assemble(DomainKind::Blocktower, m, seed, BLOCKTOWER_DOMAIN, problem_text, scene, init, goal_attachments)
}
