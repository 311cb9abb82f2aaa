//! Synthetic centers, donors and match runs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp};
use rayon::prelude::*;

use super::config::{GeneratorConfig, MeanSd};
use super::sample::*;
use super::truth::GroundTruth;
use crate::domain::*;
use crate::error::{Error, Result};
use crate::features::{compute_cit, haversine_miles, layout, DonorGeo, FeatureConfig, FeatureContext};
use crate::ingest::{Dataset, Provenance};

const STREAM_GEOGRAPHY: u64 = 1;
const STREAM_CENTERS: u64 = 2;
const STREAM_HISTORY: u64 = 3;
const STREAM_DONOR_BASE: u64 = 1 << 32;
const STREAM_RETRY_BASE: u64 = 1 << 48;

/// Correlation of KDRI, age, creatinine and diabetes with the shared
/// severity factor.
const SEVERITY_LOADING: f64 = 0.5;
const INTERCEPT_RANGE: (f64, f64) = (-20.0, 10.0);
const SHARE_TOLERANCE: f64 = 0.01;
const CALIBRATION_ATTEMPTS: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A generated dataset with the model that produced its responses.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub ground_truth: GroundTruth,
    /// Acceptance share of the generated offers.
    pub realized_accept_share: f64,
}

/// Latent center behavior driving the seed history.
#[derive(Clone, Copy, Debug)]
struct CenterLatent {
    aggressiveness: f64,
    kdri_tolerance: f64,
    cit_tolerance: f64,
}

/// Everything drawn for one donor before the simulation runs; the same draws
/// are reused for every candidate intercept.
#[derive(Clone, Debug)]
struct DonorPlan {
    donor: Donor,
    geo: DonorGeo,
    first_offer: Timestamp,
    /// Center indices in offering order.
    priority: Vec<usize>,
    delays: Vec<i64>,
    uniforms: Vec<f64>,
    patient_offers: Vec<u32>,
}

pub fn generate_synthetic(cfg: &GeneratorConfig) -> Result<Dataset> {
    Ok(generate_with_truth(cfg)?.dataset)
}

pub fn generate_with_truth(cfg: &GeneratorConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    let tables = CategoricalTables::new(cfg);
    let airports = airports(cfg);
    let (mut centers, latents) = centers(cfg);
    seed_history(cfg, &mut centers, &latents);

    let fcfg = FeatureConfig {
        utc_offset_minutes: cfg.utc_offset_minutes,
    };
    let base_ctx = FeatureContext::new(&centers, &airports, fcfg)?;
    let cities = cities(cfg);
    let mut plans: Vec<DonorPlan> = (0..cfg.n_donors)
        .into_par_iter()
        .map(|i| donor_plan(cfg, &tables, &cities, &centers, &base_ctx, i))
        .collect();
    let center_ids: Vec<CenterId> = centers.iter().map(|c| c.center_id.clone()).collect();

    let truth = GroundTruth::new(0.0, cfg.acceptance_model_coefficients.clone());
    let target = cfg.target_uncensored_accept_share;
    let mut attempt = 0;
    let (truth, runs, share) = loop {
        let b = calibrate_intercept(&base_ctx, &plans, &center_ids, &truth, target)?;
        let truth = truth.with_intercept(b);
        let (runs, share) = simulate(&base_ctx, &plans, &center_ids, &truth, true);
        if (share - target).abs() <= SHARE_TOLERANCE {
            break (truth, runs, share);
        }
        attempt += 1;
        if attempt == CALIBRATION_ATTEMPTS {
            return Err(Error::Calibration(format!(
                "closest acceptance share {share:.4} is more than {SHARE_TOLERANCE} from target {target} \
                 after {CALIBRATION_ATTEMPTS} attempts; small configurations can be unstable, try more donors"
            )));
        }
        redraw_uniforms(cfg, &mut plans, attempt);
    };

    Ok(SyntheticDataset {
        dataset: Dataset {
            centers,
            donors: plans.into_iter().map(|p| p.donor).collect(),
            match_runs: runs,
            airports,
            provenance: Provenance::Synthetic { seed: cfg.seed },
        },
        ground_truth: truth,
        realized_accept_share: share,
    })
}

fn n_cities(cfg: &GeneratorConfig) -> usize {
    (cfg.n_centers / 4).clamp(8, 40)
}

fn cities(cfg: &GeneratorConfig) -> Vec<GeoPoint> {
    let mut rng = stream(cfg.seed, STREAM_GEOGRAPHY);
    (0..n_cities(cfg)).map(|_| uniform_point(&mut rng)).collect()
}

/// A large airport at every city, two medium ones around each, and a few
/// scattered medium ones.
fn airports(cfg: &GeneratorConfig) -> AirportIndex {
    let cities = cities(cfg);
    let mut rng = stream(cfg.seed, STREAM_GEOGRAPHY + 100);
    let mut airports = Vec::new();
    for &c in &cities {
        airports.push(Airport {
            location: jitter(c, 8.0, &mut rng),
            class: AirportClass::Large,
        });
        for _ in 0..2 {
            airports.push(Airport {
                location: jitter(c, 50.0, &mut rng),
                class: AirportClass::Medium,
            });
        }
    }
    for _ in 0..cities.len() {
        airports.push(Airport {
            location: uniform_point(&mut rng),
            class: AirportClass::Medium,
        });
    }
    AirportIndex { airports }
}

fn centers(cfg: &GeneratorConfig) -> (Vec<Center>, Vec<CenterLatent>) {
    let cities = cities(cfg);
    let mut rng = stream(cfg.seed, STREAM_CENTERS);
    let pc = cfg.moments("patient_count");
    let gdp = cfg.moments("state_gdp_per_capita");
    let mut out = Vec::with_capacity(cfg.n_centers);
    let mut latents = Vec::with_capacity(cfg.n_centers);
    for i in 0..cfg.n_centers {
        let city = cities[rng.random_range(0..cities.len())];
        let location = jitter(city, 25.0, &mut rng);
        let patient_count = lognormal_at(pc, std_normal(&mut rng)).round().max(20.0) as u32;
        let state_gdp_per_capita = lognormal_at(gdp, std_normal(&mut rng)).round();
        out.push(Center {
            center_id: CenterId(format!("C{:04}", i + 1)),
            location,
            patient_count,
            state_gdp_per_capita,
            history: Vec::new(),
        });
        latents.push(CenterLatent {
            aggressiveness: cfg.center_aggressiveness_sd * std_normal(&mut rng),
            kdri_tolerance: std_normal(&mut rng),
            cit_tolerance: std_normal(&mut rng),
        });
    }
    (out, latents)
}

fn study_end(cfg: &GeneratorConfig) -> Timestamp {
    // leave room for runs that start near the end of the window
    cfg.study_start
        .plus_minutes((cfg.study_days as i64 + 30) * MINUTES_PER_DAY)
}

/// Background acceptances of kidneys outside the dataset, from three years
/// before the study window to its end.
fn seed_history(cfg: &GeneratorConfig, centers: &mut [Center], latents: &[CenterLatent]) {
    let start = cfg.study_start.plus_minutes(-3 * MINUTES_PER_YEAR);
    let end = study_end(cfg);
    let mean_patients = cfg.moments("patient_count").mean;
    let drift = cfg.center_aggressiveness_sd.powi(2) / 2.0;
    for (i, (c, lat)) in centers.iter_mut().zip(latents).enumerate() {
        let mut rng = stream(cfg.seed, STREAM_HISTORY + ((i as u64) << 8));
        let per_year = cfg.background_accepts_per_year
            * (lat.aggressiveness - drift).exp()
            * (c.patient_count as f64 / mean_patients).sqrt();
        if per_year <= 0.0 {
            continue;
        }
        let gap = Exp::new(per_year / MINUTES_PER_YEAR as f64).expect("positive rate");
        let mut t = start.minutes() as f64;
        loop {
            t += gap.sample(&mut rng);
            if t >= end.minutes() as f64 {
                break;
            }
            let kdri = (1.20 + 0.10 * lat.kdri_tolerance + 0.30 * std_normal(&mut rng)).max(0.5);
            let age = (49.0 + 2.5 * lat.kdri_tolerance + 13.0 * std_normal(&mut rng)).clamp(1.0, 85.0);
            let cit_mean = 700.0 * (0.3 * lat.cit_tolerance).exp();
            let cit = lognormal_at(
                MeanSd {
                    mean: cit_mean,
                    sd: 400.0,
                },
                std_normal(&mut rng),
            );
            let creatinine = lognormal_at(
                MeanSd {
                    mean: 1.2 * (0.15 * lat.kdri_tolerance).exp(),
                    sd: 0.9,
                },
                std_normal(&mut rng),
            );
            let peak = creatinine * (1.0 + lognormal_at(MeanSd { mean: 0.4, sd: 0.3 }, std_normal(&mut rng)));
            let iv = rng.random::<f64>() < 0.06;
            c.history.push(AcceptedKidneyRecord {
                accept_time: Timestamp::from_minutes(t as i64),
                kdri,
                kdpi: kdpi_from_kdri(kdri),
                donor_age: age,
                cit_minutes: cit.round() as i64,
                creatinine,
                diabetes_flag: rng.random::<f64>() < (0.10 * (0.3 * lat.kdri_tolerance).exp()).min(0.5),
                drug_flag: iv || rng.random::<f64>() < 0.4,
                dcd_flag: rng.random::<f64>() < 0.25,
                iv_drug_flag: iv,
                peak_creatinine: peak,
            });
        }
    }
}

fn clamp_time<R: Rng + ?Sized>(cfg: &GeneratorConfig, tables: &CategoricalTables, rng: &mut R) -> Timestamp {
    let day = rng.random_range(0..cfg.study_days as i64);
    let bucket: TimeOfDay = tables.draw("time_of_day", rng);
    let local = bucket.index() as i64 * 240 + rng.random_range(0..240);
    let utc = (local - cfg.utc_offset_minutes as i64).rem_euclid(MINUTES_PER_DAY);
    cfg.study_start.plus_minutes(day * MINUTES_PER_DAY + utc)
}

fn donor_plan(
    cfg: &GeneratorConfig,
    tables: &CategoricalTables,
    cities: &[GeoPoint],
    centers: &[Center],
    ctx: &FeatureContext,
    index: usize,
) -> DonorPlan {
    let mut rng = stream(cfg.seed, STREAM_DONOR_BASE + index as u64);
    let r = &mut rng;
    let rho = SEVERITY_LOADING;
    let severity = std_normal(r);
    let loaded = |r: &mut ChaCha8Rng| rho * severity + (1.0 - rho * rho).sqrt() * std_normal(r);

    let kdri = normal_at(cfg.moments("kdri"), loaded(r)).max(0.05);
    let age = normal_at(cfg.moments("age"), loaded(r)).max(0.0);
    let creatinine = lognormal_at(cfg.moments("creatinine"), loaded(r));
    let diabetes_u = std_normal_cdf(loaded(r));
    let peak_creatinine = creatinine * (1.0 + lognormal_at(MeanSd { mean: 0.3, sd: 0.3 }, std_normal(r)));
    let clamp = clamp_time(cfg, tables, r);
    let hospital = if r.random::<f64>() < 0.8 {
        jitter(cities[r.random_range(0..cities.len())], 60.0, r)
    } else {
        uniform_point(r)
    };

    let donor = Donor {
        donor_id: DonorId(format!("D{:06}", index + 1)),
        clamp_time: Some(clamp),
        kdri,
        kdpi: kdpi_from_kdri(kdri),
        age,
        height_cm: normal_at(cfg.moments("height_cm"), std_normal(r)).max(50.0),
        weight_kg: lognormal_at(cfg.moments("weight_kg"), std_normal(r)),
        bmi: lognormal_at(cfg.moments("bmi"), std_normal(r)),
        creatinine,
        peak_creatinine,
        blood_urea_nitrogen: lognormal_at(cfg.moments("blood_urea_nitrogen"), std_normal(r)),
        glomeruli_count: lognormal_at(cfg.moments("glomeruli_count"), std_normal(r)).round() as u32,
        blood_type: tables.draw("blood_type", r),
        ethnicity: tables.draw("ethnicity", r),
        gender: tables.draw("gender", r),
        cause_of_death: tables.draw("cause_of_death", r),
        death_mechanism_code: death_mechanism(cfg.moments("death_mechanism_code"), r),
        diabetes_history: tables.pick("diabetes_history", diabetes_u),
        insulin_dependent: tables.draw("insulin_dependent", r),
        hypertension: tables.draw("hypertension", r),
        cancer_history: tables.draw("cancer_history", r),
        cmv: tables.draw("cmv", r),
        hbv_surface_antigen: tables.draw("hbv_surface_antigen", r),
        hbv_core_antibody: tables.draw("hbv_core_antibody", r),
        hcv_antibody: tables.draw("hcv_antibody", r),
        hcv_nat: tables.draw("hcv_nat", r),
        tattoos: tables.draw("tattoos", r),
        dcd: tables.draw("dcd", r),
        smoking: tables.draw("smoking", r),
        mi_history: tables.draw("mi_history", r),
        cocaine_use: tables.draw("cocaine_use", r),
        iv_drug_use: tables.draw("iv_drug_use", r),
        other_drug_use: tables.draw("other_drug_use", r),
        insulin_use: tables.draw("insulin_use", r),
        cdc_risk_hiv: tables.draw("cdc_risk_hiv", r),
        urine_protein: tables.draw("urine_protein", r),
        antihypertensive_use: tables.draw("antihypertensive_use", r),
        arginine_use: tables.draw("arginine_use", r),
        coronary_angiography: tables.draw("coronary_angiography", r),
        legally_brain_dead: tables.draw("legally_brain_dead", r),
        interstitial_fibrosis: tables.draw("interstitial_fibrosis", r),
        hospital_location: hospital,
    };

    let mut scored: Vec<(f64, usize)> = centers
        .iter()
        .enumerate()
        .map(|(j, c)| {
            (
                haversine_miles(hospital, c.location) + cfg.priority_noise_miles * std_normal(r),
                j,
            )
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let len = cfg.max_list_length.min(centers.len());
    let priority: Vec<usize> = scored[..len].iter().map(|&(_, j)| j).collect();

    let delay = Exp::new(1.0 / cfg.mean_inter_offer_delay_minutes).expect("positive mean");
    let delays = (0..len).map(|_| (delay.sample(r).round() as i64).max(1)).collect();
    let uniforms = (0..len).map(|_| r.random::<f64>()).collect();
    let share = Beta::new(1.2, 60.0).expect("valid beta");
    let patient_offers = priority
        .iter()
        .map(|&j| {
            let n = centers[j].patient_count.max(1);
            ((share.sample(r) * n as f64).round() as u32).clamp(1, n)
        })
        .collect();

    DonorPlan {
        geo: ctx.donor_geo(&donor),
        first_offer: clamp.plus_minutes(r.random_range(-120..=240)),
        donor,
        priority,
        delays,
        uniforms,
        patient_offers,
    }
}

/// Plays every donor's run forward in global time order so each offer sees
/// exactly the offers and acceptances that precede it. Returns the runs
/// (only when `keep_runs`) and the acceptance share.
/// Bisects the intercept toward `target` and returns the closest one seen.
fn calibrate_intercept(
    base: &FeatureContext,
    plans: &[DonorPlan],
    center_ids: &[CenterId],
    truth: &GroundTruth,
    target: f64,
) -> Result<f64> {
    let share_at = |b: f64| simulate(base, plans, center_ids, &truth.with_intercept(b), false).1;
    let (mut lo, mut hi) = INTERCEPT_RANGE;
    let (s_lo, s_hi) = (share_at(lo), share_at(hi));
    if !(s_lo <= target && target <= s_hi) {
        return Err(Error::Calibration(format!(
            "target acceptance share {target} outside reachable range [{s_lo:.4}, {s_hi:.4}]"
        )));
    }
    let mut best = (f64::INFINITY, lo);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let s = share_at(mid);
        if (s - target).abs() < best.0 {
            best = ((s - target).abs(), mid);
        }
        if (s - target).abs() < 2e-4 || hi - lo < 1e-4 {
            break;
        }
        if s < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

/// Fresh response uniforms for a retry. Acceptances feed the center rate
/// features of later offers, so a small simulation can jump between a low
/// and a high acceptance regime with no intercept in between.
fn redraw_uniforms(cfg: &GeneratorConfig, plans: &mut [DonorPlan], attempt: u64) {
    for (i, p) in plans.iter_mut().enumerate() {
        let mut r = stream(cfg.seed, STREAM_RETRY_BASE + (attempt << 24) + i as u64);
        for u in &mut p.uniforms {
            *u = r.random::<f64>();
        }
    }
}

fn simulate(
    base: &FeatureContext,
    plans: &[DonorPlan],
    center_ids: &[CenterId],
    truth: &GroundTruth,
    keep_runs: bool,
) -> (Vec<MatchRun>, f64) {
    let mut ctx = base.clone();
    let mut row = vec![0.0; layout().len()];
    let mut runs: Vec<MatchRun> = if keep_runs {
        plans
            .iter()
            .map(|p| MatchRun {
                donor_id: p.donor.donor_id.clone(),
                kidney: 1,
                offers: Vec::new(),
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut queue: BinaryHeap<Reverse<(i64, usize, usize)>> = plans
        .iter()
        .enumerate()
        .map(|(d, p)| Reverse((p.first_offer.minutes(), d, 0)))
        .collect();
    let (mut offers, mut accepts) = (0usize, 0usize);

    while let Some(Reverse((minute, d, k))) = queue.pop() {
        let plan = &plans[d];
        let center = plan.priority[k];
        let time = Timestamp::from_minutes(minute);
        ctx.fill(&plan.donor, &plan.geo, center, time, &mut row)
            .expect("generated donors have clamp times");
        let accept = plan.uniforms[k] < truth.probability(&row);
        ctx.record_offer(center, time);
        offers += 1;
        if keep_runs {
            runs[d].offers.push(Offer {
                donor_id: plan.donor.donor_id.clone(),
                center_id: center_ids[center].clone(),
                offer_time: time,
                response: if accept { Response::Accept } else { Response::Reject },
                patient_offer_count: plan.patient_offers[k],
            });
        }
        if accept {
            accepts += 1;
            let clamp = plan.donor.clamp_time.expect("generated donors have clamp times");
            ctx.record_acceptance(
                center,
                AcceptedKidneyRecord::from_acceptance(&plan.donor, time, compute_cit(clamp, time)),
            );
        } else if k + 1 < plan.priority.len() {
            queue.push(Reverse((minute + plan.delays[k], d, k + 1)));
        }
    }
    (runs, accepts as f64 / offers.max(1) as f64)
}
