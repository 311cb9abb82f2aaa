//! First-offer reduction and assembly of per-kidney match runs.

use std::collections::HashMap;

use super::schema::RawOfferRow;
use crate::domain::*;
use crate::error::{Error, Result};

/// Collapses patient-level rows to one [`Offer`] per (donor, center): the
/// accepted row if there is one, else the earliest row. Offers come out in
/// order of each pair's first row.
///
/// Errors when a pair has more than one ACCEPT row; the error names the line
/// of the second one, assuming `rows` are in file order after a header.
pub fn first_offer_reduction(rows: &[RawOfferRow]) -> Result<Vec<Offer>> {
    let mut slot: HashMap<(&DonorId, &CenterId), usize> = HashMap::new();
    let mut out: Vec<Offer> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let accept = row.response.is_accept();
        match slot.get(&(&row.donor_id, &row.center_id)) {
            None => {
                slot.insert((&row.donor_id, &row.center_id), out.len());
                out.push(Offer {
                    donor_id: row.donor_id.clone(),
                    center_id: row.center_id.clone(),
                    offer_time: row.offer_time,
                    response: row.response,
                    patient_offer_count: 1,
                });
            }
            Some(&k) => {
                let o = &mut out[k];
                o.patient_offer_count += 1;
                match (o.response.is_accept(), accept) {
                    (true, true) => {
                        return Err(Error::Schema {
                            file: "offers.csv".into(),
                            line: i as u64 + 2,
                            column: "response".into(),
                            message: format!("second ACCEPT for donor {} at center {}", row.donor_id, row.center_id),
                        })
                    }
                    (false, true) => {
                        o.response = Response::Accept;
                        o.offer_time = row.offer_time;
                    }
                    (false, false) => o.offer_time = o.offer_time.min(row.offer_time),
                    (true, false) => {}
                }
            }
        }
    }
    Ok(out)
}

/// Expands reduced offers back to patient-level rows: `patient_offer_count`
/// rows at the offer time, the last of which carries the response.
pub fn expand_offers(offers: &[Offer]) -> Vec<RawOfferRow> {
    let mut rows = Vec::new();
    for o in offers {
        let n = o.patient_offer_count.max(1);
        for j in 1..=n {
            rows.push(RawOfferRow {
                donor_id: o.donor_id.clone(),
                center_id: o.center_id.clone(),
                patient_pseudo_id: format!("{}-{}-{j}", o.donor_id, o.center_id),
                offer_time: o.offer_time,
                response: if j == n { o.response } else { Response::Reject },
            });
        }
    }
    rows
}

/// Groups offers into time-ordered runs, one per donor in order of first
/// appearance. A donor with exactly two acceptances is split after the first
/// accept into two kidney runs; donors with more stay in one run so the
/// exclusion step can see them.
pub fn assemble_match_runs(offers: Vec<Offer>) -> Vec<MatchRun> {
    let mut order: Vec<DonorId> = Vec::new();
    let mut by_donor: HashMap<DonorId, Vec<Offer>> = HashMap::new();
    for o in offers {
        by_donor
            .entry(o.donor_id.clone())
            .or_insert_with(|| {
                order.push(o.donor_id.clone());
                Vec::new()
            })
            .push(o);
    }
    let mut runs = Vec::new();
    for donor_id in order {
        let mut offers = by_donor.remove(&donor_id).expect("grouped above");
        offers.sort_by_key(|o| o.offer_time);
        let accepts: Vec<usize> = offers
            .iter()
            .enumerate()
            .filter(|(_, o)| o.response.is_accept())
            .map(|(i, _)| i)
            .collect();
        if accepts.len() == 2 {
            let second = offers.split_off(accepts[0] + 1);
            runs.push(MatchRun {
                donor_id: donor_id.clone(),
                kidney: 1,
                offers,
            });
            runs.push(MatchRun {
                donor_id,
                kidney: 2,
                offers: second,
            });
        } else {
            runs.push(MatchRun {
                donor_id,
                kidney: 1,
                offers,
            });
        }
    }
    runs
}
