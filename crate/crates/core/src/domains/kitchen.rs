use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{ArmModel, Body, Scene, Shape};

use super::{assemble, body_id, check_m, slot, surface, translation, BenchmarkInstance, DomainError, DomainKind};

pub const KITCHEN_DOMAIN: &str = r#"(define (domain kitchen)
  (:requirements :strips :typing)
  (:types food - movable movable surface robot - object)
  (:constants robot - robot sink stove - surface)
  (:predicates (attached ?m - movable ?p - object) (handempty)
               (washed ?f - food) (cooked ?f - food))
  (:action pick
    :parameters (?f - food ?s - surface)
    :precondition (and (attached ?f ?s) (handempty))
    :effect (and (attached ?f robot) (not (attached ?f ?s)) (not (handempty))))
  (:action place
    :parameters (?f - food ?s - surface)
    :precondition (attached ?f robot)
    :effect (and (attached ?f ?s) (not (attached ?f robot)) (handempty)))
  (:action wash
    :parameters (?f - food)
    :precondition (attached ?f sink)
    :effect (washed ?f))
  (:action cook
    :parameters (?f - food)
    :precondition (and (attached ?f stove) (washed ?f))
    :effect (cooked ?f)))
"#;

/// Free fraction of the sink and stove beyond the footprint of all blocks.
pub const KITCHEN_MARGIN: f64 = 0.1;

const FOOD: f64 = 0.1;

/// `m` food blocks on a dish that must each be washed in the sink and
/// cooked on the stove. Sink and stove hold exactly `m` blocks, so every
/// block ends up boxed in by its neighbours.
pub fn build_kitchen(m: usize, seed: u64) -> Result<BenchmarkInstance, DomainError> {
    check_m(DomainKind::Kitchen, m)?;
    let tight = (1.0 + KITCHEN_MARGIN) * m as f64 * FOOD;
    let mut bodies = vec![surface("dish", 2.0 * tight), surface("sink", tight), surface("stove", tight)];
    let foods: Vec<String> = (1..=m).map(|i| format!("f{i}")).collect();
    bodies.extend(foods.iter().map(|f| Body::new(f.as_str(), Shape::rect(FOOD, FOOD), true)));
    let mut poses = BTreeMap::new();
    poses.insert("dish".to_string(), translation(0.0, -1.3));
    poses.insert("sink".to_string(), translation(-1.2, -0.5));
    poses.insert("stove".to_string(), translation(1.2, -0.5));
    let scene = Scene::new(bodies, ArmModel::default(), poses).map_err(crate::tamp::TampError::from)?;

    for region in ["sink", "stove"] {
        check_tight(&scene, region, m)?;
    }

    let dish_slots = scene.placement_slots(body_id(&scene, "f1"), body_id(&scene, "dish")).len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, dish_slots, m).into_vec();
    chosen.sort_unstable();
    let init = foods.iter().zip(&chosen).map(|(f, &k)| slot(&scene, f, "dish", k)).collect();

    let objects = foods.join(" ");
    let init_atoms: String = foods.iter().map(|f| format!(" (attached {f} dish)")).collect();
    let goal: String = foods.iter().map(|f| format!(" (cooked {f})")).collect();
    let problem_text = format!(
        "(define (problem kitchen-{m}) (:domain kitchen)\n  (:objects {objects} - food dish - surface)\n  (:init (handempty){init_atoms})\n  (:goal (and{goal})))\n"
    );
    assemble(DomainKind::Kitchen, m, seed, KITCHEN_DOMAIN, problem_text, scene, init, Vec::new())
}

/// With every slot of `region` occupied, a further block collides wherever
/// it is placed, and the `m` occupants are pairwise clear.
fn check_tight(scene: &Scene, region: &str, m: usize) -> Result<(), DomainError> {
    let f = body_id(scene, "f1");
    let r = body_id(scene, region);
    let slots = scene.placement_slots(f, r);
    if slots.len() != m {
        return Err(DomainError::SelfCheck(format!("{region} holds {} blocks, expected {m}", slots.len())));
    }
    let base = scene.static_pose(r).unwrap();
    let shape = &scene.body(f).shape;
    let placed: Vec<_> = slots.iter().map(|t| shape.at(&base.compose(t))).collect();
    for (i, a) in placed.iter().enumerate() {
        if placed[i + 1..].iter().any(|b| a.intersects(b)) {
            return Err(DomainError::SelfCheck(format!("{region} slots overlap")));
        }
    }
    // Sweep a further block along the whole region, not just the slots.
    let reg = scene.body(r).region.unwrap();
    let y = slots[0].y;
    let steps = ((reg.width() - FOOD) / 1e-3).floor() as usize;
    for k in 0..=steps {
        let x = reg.x_min + FOOD / 2.0 + k as f64 * 1e-3;
        let extra = shape.at(&base.compose(&translation(x, y)));
        if !placed.iter().any(|p| p.intersects(&extra)) {
            return Err(DomainError::SelfCheck(format!("{region} admits an extra block at {x}")));
        }
    }
    Ok(())
}
