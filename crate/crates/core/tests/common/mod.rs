#![allow(dead_code)]

use kidrank_core::learners::{Node, Tree};
use kidrank_core::*;
use rand::Rng;

pub fn donor(id: &str) -> Donor {
    Donor {
        donor_id: DonorId::from(id),
        clamp_time: Timestamp::from_ymd_hm(2019, 6, 1, 10, 0),
        kdri: 1.8,
        kdpi: 85.0,
        age: 60.0,
        height_cm: 170.0,
        weight_kg: 85.0,
        bmi: 29.4,
        creatinine: 1.5,
        peak_creatinine: 2.0,
        blood_urea_nitrogen: 25.0,
        glomeruli_count: 60,
        blood_type: BloodType::O,
        ethnicity: Ethnicity::White,
        gender: Gender::M,
        cause_of_death: CauseOfDeath::CvdStroke,
        death_mechanism_code: 4,
        diabetes_history: DiabetesHistory::No,
        insulin_dependent: InsulinDependent::No,
        hypertension: TriState::Yes,
        cancer_history: TriState::No,
        cmv: Cmv::Positive,
        hbv_surface_antigen: Serology::Negative,
        hbv_core_antibody: Serology::Negative,
        hcv_antibody: Serology::Negative,
        hcv_nat: Serology::Negative,
        tattoos: TriState::No,
        dcd: TriState::No,
        smoking: TriState::No,
        mi_history: TriState::No,
        cocaine_use: TriState::No,
        iv_drug_use: TriState::No,
        other_drug_use: TriState::No,
        insulin_use: TriState::No,
        cdc_risk_hiv: TriState::No,
        urine_protein: TriState::No,
        antihypertensive_use: TriState::No,
        arginine_use: TriState::No,
        coronary_angiography: TriState::No,
        legally_brain_dead: TriState::Yes,
        interstitial_fibrosis: Fibrosis::Some,
        hospital_location: GeoPoint::new(40.0, -75.0).unwrap(),
    }
}

fn grow<R: Rng>(rng: &mut R, nodes: &mut Vec<Node>, n_features: usize, depth: usize) -> f64 {
    let split = depth > 0 && (nodes.is_empty() || rng.random::<f64>() < 0.8);
    if !split {
        let cover = rng.random_range(1.0..50.0_f64).round();
        nodes.push(Node::Leaf {
            value: rng.random_range(-2.0..2.0),
            cover,
        });
        return cover;
    }
    let at = nodes.len();
    nodes.push(Node::Leaf { value: 0.0, cover: 0.0 });
    let left = nodes.len();
    let lc = grow(rng, nodes, n_features, depth - 1);
    let right = nodes.len();
    let rc = grow(rng, nodes, n_features, depth - 1);
    nodes[at] = Node::Split {
        feature: rng.random_range(0..n_features),
        threshold: rng.random_range(0.1..0.9),
        left,
        right,
        cover: lc + rc,
    };
    lc + rc
}

/// Random pre-order tree with positive covers that add up.
pub fn random_tree<R: Rng>(rng: &mut R, n_features: usize, max_depth: usize) -> Tree {
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, n_features, max_depth);
    Tree::from_nodes(nodes).unwrap()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}
