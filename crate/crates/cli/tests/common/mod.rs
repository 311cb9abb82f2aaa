#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kidrank_core::features::{canonical_names, FeatureMatrix, FeatureTable, OfferKey};
use kidrank_core::ingest::{Dataset, Provenance};
use kidrank_core::learners::{Model, Node, Tree, TreeModel};
use kidrank_core::*;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_kidrank"))
}

pub fn kidrank(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Panics with the captured streams unless the command succeeded.
pub fn ok(o: Output) -> Output {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        stderr(&o)
    );
    o
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp paths")
}

pub fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn read_table(path: &Path) -> FeatureTable {
    FeatureTable::read_csv(std::fs::File::open(path).unwrap()).unwrap()
}

pub fn col(name: &str) -> usize {
    canonical_names().iter().position(|n| n == name).unwrap()
}

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

/// Per-center higher-KDRI and KAP-eligible acceptance counts of the worked
/// example, and the model's probabilities for the five offers.
pub const EXAMPLE_KDRI_COUNTS: [usize; 5] = [23, 104, 13, 44, 25];
pub const EXAMPLE_KAP_COUNTS: [usize; 5] = [1, 2, 1, 2, 0];
pub const EXAMPLE_PROBS: [f64; 5] = [0.037, 0.208, 0.018, 0.118, 0.580];

fn history_record(t: Timestamp, kap_eligible: bool) -> AcceptedKidneyRecord {
    // every record beats the offered donor's KDRI of 1.8; only eligible ones
    // also clear the KAP thresholds
    AcceptedKidneyRecord {
        accept_time: t,
        kdri: 2.0,
        kdpi: if kap_eligible { 90.0 } else { 50.0 },
        donor_age: if kap_eligible { 60.0 } else { 30.0 },
        cit_minutes: 600,
        creatinine: 1.0,
        diabetes_flag: false,
        drug_flag: false,
        dcd_flag: false,
        iv_drug_flag: false,
        peak_creatinine: if kap_eligible { 2.0 } else { 1.0 },
    }
}

/// One kidney offered to five centers in turn; the fifth accepts.
pub fn worked_example_dataset() -> Dataset {
    let d = donor("D1");
    let clamp = d.clamp_time.unwrap();
    let history_start = Timestamp::from_ymd_hm(2019, 1, 1, 0, 0).unwrap();
    let centers: Vec<Center> = (0..5)
        .map(|c| Center {
            center_id: CenterId::from(format!("C{}", c + 1).as_str()),
            location: GeoPoint::new(38.0 + c as f64, -80.0).unwrap(),
            patient_count: 100 * (c as u32 + 1),
            state_gdp_per_capita: 60000.0,
            history: (0..EXAMPLE_KDRI_COUNTS[c])
                .map(|j| history_record(history_start.plus_minutes(60 * j as i64), j < EXAMPLE_KAP_COUNTS[c]))
                .collect(),
        })
        .collect();
    let offers = centers
        .iter()
        .enumerate()
        .map(|(i, c)| Offer {
            donor_id: d.donor_id.clone(),
            center_id: c.center_id.clone(),
            offer_time: clamp.plus_minutes(60 * (i as i64 + 1)),
            response: if i == 4 { Response::Accept } else { Response::Reject },
            patient_offer_count: 1,
        })
        .collect();
    Dataset {
        centers,
        donors: vec![d.clone()],
        match_runs: vec![MatchRun {
            donor_id: d.donor_id.clone(),
            kidney: 1,
            offers,
        }],
        airports: AirportIndex {
            airports: vec![
                Airport {
                    location: GeoPoint::new(39.5, -77.0).unwrap(),
                    class: AirportClass::Medium,
                },
                Airport {
                    location: GeoPoint::new(41.0, -74.0).unwrap(),
                    class: AirportClass::Large,
                },
            ],
        },
        provenance: Provenance::Ingested,
    }
}

/// A decision tree on `center_patient_count` mapping 100..=500 patients to
/// [`EXAMPLE_PROBS`].
pub fn worked_example_model() -> Model {
    let f = col("center_patient_count");
    let leaf = |i: usize| Node::Leaf {
        value: EXAMPLE_PROBS[i],
        cover: 1.0,
    };
    let split = |threshold: f64, left: usize, right: usize, cover: f64| Node::Split {
        feature: f,
        threshold,
        left,
        right,
        cover,
    };
    let nodes = vec![
        split(250.0, 1, 4, 5.0),
        split(150.0, 2, 3, 2.0),
        leaf(0),
        leaf(1),
        split(350.0, 5, 6, 3.0),
        leaf(2),
        split(450.0, 7, 8, 2.0),
        leaf(3),
        leaf(4),
    ];
    Model::DecisionTree(TreeModel {
        feature_names: canonical_names().to_vec(),
        tree: Tree::from_nodes(nodes).unwrap(),
    })
}

/// A stump on `feature`: `<= threshold` gives `lo` (cover 3), else `hi`
/// (cover 1).
pub fn stump(feature: &str, threshold: f64, lo: f64, hi: f64) -> Model {
    let nodes = vec![
        Node::Split {
            feature: col(feature),
            threshold,
            left: 1,
            right: 2,
            cover: 4.0,
        },
        Node::Leaf { value: lo, cover: 3.0 },
        Node::Leaf { value: hi, cover: 1.0 },
    ];
    Model::DecisionTree(TreeModel {
        feature_names: canonical_names().to_vec(),
        tree: Tree::from_nodes(nodes).unwrap(),
    })
}

/// A feature table of one run per donor: row `i` belongs to donor `D{i / per_run}`
/// and gets `values[i]` in `feature`; every other column is zero.
pub fn table_with(feature: &str, values: &[f64], per_run: usize) -> FeatureTable {
    let names = canonical_names();
    let j = col(feature);
    let mut data = vec![0.0; values.len() * names.len()];
    for (i, v) in values.iter().enumerate() {
        data[i * names.len() + j] = *v;
    }
    let keys = (0..values.len())
        .map(|i| OfferKey {
            donor_id: DonorId::from(format!("D{}", i / per_run).as_str()),
            kidney: 1,
            center_id: CenterId::from(format!("C{}", i % per_run).as_str()),
            position: i % per_run,
        })
        .collect();
    let labels = (0..values.len()).map(|i| u8::from(i % per_run == 0)).collect();
    FeatureTable::new(FeatureMatrix::new(names, data).unwrap(), labels, keys).unwrap()
}

/// A run directory holding only what `explain` reads.
pub fn explain_run_dir(dir: &Path, model: &Model, eval: &FeatureTable) {
    std::fs::create_dir_all(dir).unwrap();
    write(&dir.join("model.json"), &model.to_json().unwrap());
    let mut buf = Vec::new();
    eval.write_csv(&mut buf).unwrap();
    std::fs::write(dir.join("features_eval.csv"), buf).unwrap();
}

/// Generator settings small enough for quick CLI runs.
pub fn small_generator(n_donors: usize, n_centers: usize) -> String {
    format!("n_donors = {n_donors}\nn_centers = {n_centers}\n")
}

fn grow<R: rand::Rng>(rng: &mut R, nodes: &mut Vec<Node>, n_features: usize, depth: usize) -> f64 {
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
pub fn random_tree<R: rand::Rng>(rng: &mut R, n_features: usize, max_depth: usize) -> Tree {
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, n_features, max_depth);
    Tree::from_nodes(nodes).unwrap()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}
