//! Instance-segmentation AP, room-labeling metrics, and label-aware pipeline mAP.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::{mask_iou, Category, InstanceMask, SegmentationResult};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// One prediction after matching against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub confidence: f64,
    pub matched: bool,
    pub best_iou: f64,
}

/// Area under the precision-recall curve with precision made non-increasing
/// from the right. `hits` is the relevance of each ranked prediction.
pub fn all_point_ap(hits: &[bool], n_relevant: usize) -> f64 {
    if n_relevant == 0 {
        return if hits.is_empty() { 1.0 } else { 0.0 };
    }
    let mut recall = Vec::with_capacity(hits.len());
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (k, &h) in hits.iter().enumerate() {
        tp += usize::from(h);
        recall.push(tp as f64 / n_relevant as f64);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

/// Greedy matching: predictions in descending confidence (ties by id) each
/// claim the unmatched ground truth with the highest IoU (ties by id).
fn match_predictions(preds: &[&InstanceMask], gts: &[&InstanceMask], threshold: f64) -> Result<Vec<(DetectionRecord, u32)>> {
    let mut order: Vec<&InstanceMask> = preds.to_vec();
    order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.instance_id.cmp(&b.instance_id)));
    let mut gts: Vec<&InstanceMask> = gts.to_vec();
    gts.sort_by_key(|g| g.instance_id);
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::with_capacity(order.len());
    for p in order {
        let mut best: Option<(usize, f64)> = None;
        for (k, g) in gts.iter().enumerate() {
            if taken[k] {
                continue;
            }
            let iou = mask_iou(&p.mask, &g.mask)?;
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((k, iou));
            }
        }
        let best_iou = best.map_or(0.0, |(_, v)| v);
        let matched = match best {
            Some((k, iou)) if iou >= threshold => {
                taken[k] = true;
                true
            }
            _ => false,
        };
        out.push((
            DetectionRecord {
                confidence: p.confidence,
                matched,
                best_iou,
            },
            p.instance_id,
        ));
    }
    Ok(out)
}

/// Pools matched records from several scenes and computes AP. Records are
/// ranked by confidence, then scene index, then instance id.
fn pooled_ap(per_scene: Vec<Vec<(DetectionRecord, u32)>>, n_gt: usize) -> f64 {
    let mut all: Vec<(usize, DetectionRecord, u32)> = per_scene
        .into_iter()
        .enumerate()
        .flat_map(|(s, recs)| recs.into_iter().map(move |(r, id)| (s, r, id)))
        .collect();
    all.sort_by(|a, b| b.1.confidence.total_cmp(&a.1.confidence).then(a.0.cmp(&b.0)).then(a.2.cmp(&b.2)));
    let hits: Vec<bool> = all.iter().map(|(_, r, _)| r.matched).collect();
    all_point_ap(&hits, n_gt)
}

/// AP of one category at `iou_threshold`. 1 if the category is absent from
/// both sets, 0 if it is absent from exactly one.
pub fn average_precision(preds: &[InstanceMask], gts: &[InstanceMask], category: Category, iou_threshold: f64) -> Result<f64> {
    average_precision_scenes(&[(preds, gts)], category, iou_threshold)
}

/// AP over a set of scenes; matching happens within each scene and the
/// ranked detections are pooled.
pub fn average_precision_scenes(scenes: &[(&[InstanceMask], &[InstanceMask])], category: Category, iou_threshold: f64) -> Result<f64> {
    let mut n_gt = 0;
    let mut per_scene = Vec::with_capacity(scenes.len());
    for (preds, gts) in scenes {
        check_dims(preds, gts)?;
        let p: Vec<&InstanceMask> = preds.iter().filter(|m| m.category == category).collect();
        let g: Vec<&InstanceMask> = gts.iter().filter(|m| m.category == category).collect();
        n_gt += g.len();
        per_scene.push(match_predictions(&p, &g, iou_threshold)?);
    }
    Ok(pooled_ap(per_scene, n_gt))
}

fn check_dims(preds: &[InstanceMask], gts: &[InstanceMask]) -> Result<()> {
    let mut dims = preds.iter().chain(gts).map(|m| m.mask.dims());
    if let Some(first) = dims.next() {
        if let Some(other) = dims.find(|d| *d != first) {
            return Err(Error::dim(format!(
                "masks are {}x{} and {}x{}",
                first.0, first.1, other.0, other.1
            )));
        }
    }
    Ok(())
}

/// Per-class AP rows plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub title: String,
    pub iou_threshold: f64,
    pub rows: Vec<ApRow>,
    pub mean_ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApRow {
    pub name: String,
    pub ap: f64,
    pub num_gt: usize,
    pub num_pred: usize,
}

/// Room and transition AP over a scene set, with mAP over categories that
/// have at least one ground-truth instance.
pub fn segmentation_report(scenes: &[(&SegmentationResult, &SegmentationResult)], iou_threshold: f64) -> Result<ApReport> {
    let pairs: Vec<(&[InstanceMask], &[InstanceMask])> =
        scenes.iter().map(|(p, g)| (p.instances.as_slice(), g.instances.as_slice())).collect();
    let mut rows = Vec::new();
    for cat in [Category::Room, Category::Transition] {
        let count = |seg: &SegmentationResult| seg.instances.iter().filter(|m| m.category == cat).count();
        rows.push(ApRow {
            name: cat.as_str().into(),
            ap: average_precision_scenes(&pairs, cat, iou_threshold)?,
            num_gt: scenes.iter().map(|s| count(s.1)).sum(),
            num_pred: scenes.iter().map(|s| count(s.0)).sum(),
        });
    }
    Ok(ApReport::new("Instance segmentation", iou_threshold, rows))
}

impl ApReport {
    fn new(title: &str, iou_threshold: f64, rows: Vec<ApRow>) -> Self {
        let present: Vec<f64> = rows.iter().filter(|r| r.num_gt > 0).map(|r| r.ap).collect();
        let mean_ap = if present.is_empty() { 0.0 } else { present.iter().sum::<f64>() / present.len() as f64 };
        Self {
            title: title.into(),
            iou_threshold,
            rows,
            mean_ap,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
        let mut s = String::new();
        let _ = writeln!(s, "{} (AP @ {:.2} IoU)", self.title, self.iou_threshold);
        let _ = writeln!(s, "{:<width$}  {:>7}  {:>6}  {:>6}", "class", "AP", "#gt", "#pred");
        for r in &self.rows {
            let _ = writeln!(s, "{:<width$}  {:>7.3}  {:>6}  {:>6}", r.name, r.ap, r.num_gt, r.num_pred);
        }
        let _ = writeln!(s, "{:<width$}  {:>7.3}", "mAP", self.mean_ap);
        s
    }
}

/// Label-aware mAP over a scene set: for each room type, predictions carrying
/// that label are matched against ground-truth rooms carrying it. Rooms without
/// a label take part in no type. The mean runs over types present in the
/// ground truth.
pub fn pipeline_report(scenes: &[(&SegmentationResult, &SegmentationResult)], iou_threshold: f64) -> Result<ApReport> {
    let mut types: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (pred, gt) in scenes {
        for m in gt.rooms().filter_map(|m| m.label.as_deref()) {
            types.entry(m).or_default().0 += 1;
        }
        for m in pred.rooms().filter_map(|m| m.label.as_deref()) {
            types.entry(m).or_default().1 += 1;
        }
    }
    let mut rows = Vec::new();
    for (ty, (num_gt, num_pred)) in types {
        let mut per_scene = Vec::with_capacity(scenes.len());
        for (pred, gt) in scenes {
            check_dims(&pred.instances, &gt.instances)?;
            let p: Vec<&InstanceMask> = pred.rooms().filter(|m| m.label.as_deref() == Some(ty)).collect();
            let g: Vec<&InstanceMask> = gt.rooms().filter(|m| m.label.as_deref() == Some(ty)).collect();
            per_scene.push(match_predictions(&p, &g, iou_threshold)?);
        }
        rows.push(ApRow {
            name: ty.into(),
            ap: pooled_ap(per_scene, num_gt),
            num_gt,
            num_pred,
        });
    }
    Ok(ApReport::new("Complete pipeline", iou_threshold, rows))
}

/// mAP of [`pipeline_report`] for a single scene.
pub fn pipeline_map(pred: &SegmentationResult, gt: &SegmentationResult, iou_threshold: f64) -> Result<f64> {
    pipeline_report(&[(pred, gt)], iou_threshold).map(|r| r.mean_ap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub name: String,
    /// Ground-truth count.
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// One-vs-rest AP from score ranking; `None` without ground-truth instances.
    pub ap: Option<f64>,
}

/// Room-labeling metrics. `precision` and `recall` are support-weighted
/// averages, like `weighted_f1`; `mean_ap` averages categories with support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub title: String,
    pub categories: Vec<CategoryMetrics>,
    pub precision: f64,
    pub recall: f64,
    pub weighted_f1: f64,
    pub mean_ap: f64,
    pub accuracy: f64,
}

/// A labeler's decision for one room plus its score for every phrase
/// (in the order of the phrase list given to [`labeling_metrics`]).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPrediction {
    pub label: String,
    pub scores: Vec<f64>,
}

pub fn labeling_metrics(preds: &[LabelPrediction], gt: &[String], phrases: &[String]) -> Result<MetricReport> {
    if preds.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    if preds.len() != gt.len() {
        return Err(Error::invalid(format!("{} predictions but {} ground-truth labels", preds.len(), gt.len())));
    }
    let index: BTreeMap<&str, usize> = phrases.iter().enumerate().map(|(k, p)| (p.as_str(), k)).collect();
    if index.len() != phrases.len() {
        return Err(Error::invalid("phrase list contains duplicates"));
    }
    let lookup = |l: &str| index.get(l).copied().ok_or_else(|| Error::invalid(format!("unknown label '{l}'")));
    let mut pairs = Vec::with_capacity(preds.len());
    for (p, g) in preds.iter().zip(gt) {
        if p.scores.len() != phrases.len() {
            return Err(Error::dim(format!("{} scores for {} phrases", p.scores.len(), phrases.len())));
        }
        pairs.push((lookup(&p.label)?, lookup(g)?));
    }

    let n = preds.len();
    let mut categories = Vec::with_capacity(phrases.len());
    let (mut wp, mut wr, mut wf, mut correct) = (0.0, 0.0, 0.0, 0usize);
    let mut aps = Vec::new();
    for (c, name) in phrases.iter().enumerate() {
        let tp = pairs.iter().filter(|(p, g)| *p == c && *g == c).count();
        let predicted = pairs.iter().filter(|(p, _)| *p == c).count();
        let support = pairs.iter().filter(|(_, g)| *g == c).count();
        correct += tp;
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        let w = support as f64 / n as f64;
        wp += w * precision;
        wr += w * recall;
        wf += w * f1;
        let ap = (support > 0).then(|| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| preds[b].scores[c].total_cmp(&preds[a].scores[c]).then(a.cmp(&b)));
            let hits: Vec<bool> = order.iter().map(|&k| pairs[k].1 == c).collect();
            all_point_ap(&hits, support)
        });
        aps.extend(ap);
        categories.push(CategoryMetrics {
            name: name.clone(),
            support,
            precision,
            recall,
            f1,
            ap,
        });
    }
    Ok(MetricReport {
        title: "Room labeling".into(),
        categories,
        precision: wp,
        recall: wr,
        weighted_f1: wf,
        mean_ap: aps.iter().sum::<f64>() / aps.len() as f64,
        accuracy: correct as f64 / n as f64,
    })
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_table(&self) -> String {
        let width = self.categories.iter().map(|c| c.name.len()).max().unwrap_or(0).max(11);
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.title);
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>6}  {:>6}  {:>6}  {:>6}",
            "label", "precision", "recall", "F1", "AP", "#gt"
        );
        for c in &self.categories {
            let ap = c.ap.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(
                s,
                "{:<width$}  {:>9.3}  {:>6.3}  {:>6.3}  {:>6}  {:>6}",
                c.name, c.precision, c.recall, c.f1, ap, c.support
            );
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:>9.3}  {:>6.3}  {:>6.3}  {:>6.3}",
            "weighted/mAP", self.precision, self.recall, self.weighted_f1, self.mean_ap
        );
        let _ = writeln!(s, "{:<width$}  {:>9.3}", "accuracy", self.accuracy);
        s
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::grid::{BinaryGrid, Grid};
    use crate::occupancy::GridSpec;

    fn cells(w: usize, on: &[usize]) -> BinaryGrid {
        let mut g = Grid::filled(w, 1, false);
        for &k in on {
            g.as_mut_slice()[k] = true;
        }
        g
    }

    fn inst(id: u32, cat: Category, on: &[usize], conf: f64) -> InstanceMask {
        InstanceMask::new(id, cat, cells(20, on), conf).unwrap()
    }

    #[test]
    fn single_pair_threshold() {
        // IoU 3/5 = 0.6
        let gt = [inst(0, Category::Room, &[0, 1, 2, 3], 1.0)];
        let good = [inst(1, Category::Room, &[1, 2, 3, 4], 0.9)];
        assert_eq!(average_precision(&good, &gt, Category::Room, 0.5).unwrap(), 1.0);
        // IoU 2/6
        let bad = [inst(1, Category::Room, &[2, 3, 4, 5], 0.9)];
        assert_eq!(average_precision(&bad, &gt, Category::Room, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn three_predictions_two_truths() {
        let gts = [inst(0, Category::Room, &[0, 1], 1.0), inst(1, Category::Room, &[10, 11], 1.0)];
        let preds = [
            inst(5, Category::Room, &[0, 1], 0.9),
            inst(6, Category::Room, &[15], 0.8),
            inst(7, Category::Room, &[10, 11], 0.7),
        ];
        let ap = average_precision(&preds, &gts, Category::Room, 0.5).unwrap();
        assert!((ap - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-12);
        assert!((ap - 0.8333).abs() < 1e-4);
    }

    #[test]
    fn empty_sets() {
        assert_eq!(average_precision(&[], &[], Category::Transition, 0.5).unwrap(), 1.0);
        let one = [inst(0, Category::Room, &[0], 1.0)];
        assert_eq!(average_precision(&one, &[], Category::Room, 0.5).unwrap(), 0.0);
        assert_eq!(average_precision(&[], &one, Category::Room, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = [inst(0, Category::Room, &[0], 1.0)];
        let b = [InstanceMask::new(1, Category::Room, cells(5, &[0]), 1.0).unwrap()];
        assert!(average_precision(&a, &b, Category::Room, 0.5).is_err());
    }

    /// For each recall level k/N, the best precision at any rank reaching it.
    fn brute_force_ap(hits: &[bool], n: usize) -> f64 {
        if n == 0 {
            return if hits.is_empty() { 1.0 } else { 0.0 };
        }
        let mut total = 0.0;
        for k in 1..=n {
            let mut best: f64 = 0.0;
            let mut tp = 0;
            for (rank, &h) in hits.iter().enumerate() {
                tp += usize::from(h);
                if tp >= k {
                    best = best.max(tp as f64 / (rank + 1) as f64);
                }
            }
            total += best / n as f64;
        }
        total
    }

    proptest! {
        #[test]
        fn matches_brute_force(hits in prop::collection::vec(any::<bool>(), 0..=5), extra_gt in 0usize..3) {
            let n = hits.iter().filter(|h| **h).count() + extra_gt;
            let a = all_point_ap(&hits, n);
            let b = brute_force_ap(&hits, n);
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }

        #[test]
        fn masks_fixture_matches_brute_force(
            preds in prop::collection::vec((0usize..6, 0.0f64..1.0), 0..=5),
            n_gt in 0usize..4,
        ) {
            let gts: Vec<InstanceMask> = (0..n_gt).map(|k| inst(k as u32, Category::Room, &[3 * k, 3 * k + 1], 1.0)).collect();
            let ps: Vec<InstanceMask> = preds.iter().enumerate()
                .map(|(k, &(slot, c))| inst(100 + k as u32, Category::Room, &[3 * slot, 3 * slot + 1], c))
                .collect();
            let ap = average_precision(&ps, &gts, Category::Room, 0.5).unwrap();
            // Identical masks either coincide (IoU 1) or are disjoint, so relevance
            // is "first prediction on a not yet claimed gt slot".
            let mut order: Vec<&InstanceMask> = ps.iter().collect();
            order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.instance_id.cmp(&b.instance_id)));
            let mut claimed = std::collections::HashSet::new();
            let hits: Vec<bool> = order.iter().map(|p| {
                let slot = p.mask.ones().next().unwrap() / 3;
                slot < n_gt && claimed.insert(slot)
            }).collect();
            prop_assert!((ap - brute_force_ap(&hits, n_gt)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ap));
        }

        #[test]
        fn zero_iou_low_confidence_never_helps(
            preds in prop::collection::vec((0usize..4, 0.1f64..1.0), 0..=5),
            n_gt in 1usize..4,
        ) {
            let gts: Vec<InstanceMask> = (0..n_gt).map(|k| inst(k as u32, Category::Room, &[3 * k], 1.0)).collect();
            let mut ps: Vec<InstanceMask> = preds.iter().enumerate()
                .map(|(k, &(slot, c))| inst(100 + k as u32, Category::Room, &[3 * slot], c))
                .collect();
            let before = average_precision(&ps, &gts, Category::Room, 0.5).unwrap();
            ps.push(inst(999, Category::Room, &[19], 0.0));
            let after = average_precision(&ps, &gts, Category::Room, 0.5).unwrap();
            prop_assert!(after <= before + 1e-15);
        }

        #[test]
        fn relabeling_ids_changes_nothing(
            preds in prop::collection::vec((0usize..4, 0.0f64..1.0), 1..=5),
            shift in 1u32..1000,
        ) {
            let gts: Vec<InstanceMask> = (0..3).map(|k| inst(k as u32, Category::Room, &[3 * k, 3 * k + 1], 1.0)).collect();
            let ps: Vec<InstanceMask> = preds.iter().enumerate()
                .map(|(k, &(slot, c))| inst(10 + k as u32, Category::Room, &[3 * slot, 3 * slot + 2], c))
                .collect();
            let moved_gt: Vec<InstanceMask> = gts.iter().cloned().map(|mut m| { m.instance_id += shift; m }).collect();
            let moved_p: Vec<InstanceMask> = ps.iter().cloned().map(|mut m| { m.instance_id += shift; m }).collect();
            prop_assert_eq!(
                average_precision(&ps, &gts, Category::Room, 0.5).unwrap(),
                average_precision(&moved_p, &moved_gt, Category::Room, 0.5).unwrap()
            );
        }
    }

    fn phrases(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn pred(label: &str, scores: &[f64]) -> LabelPrediction {
        LabelPrediction {
            label: label.into(),
            scores: scores.to_vec(),
        }
    }

    #[test]
    fn perfect_labeling() {
        let ph = phrases(&["bedroom", "kitchen"]);
        let preds = [pred("bedroom", &[0.9, 0.1]), pred("kitchen", &[0.2, 0.8])];
        let r = labeling_metrics(&preds, &phrases(&["bedroom", "kitchen"]), &ph).unwrap();
        assert_eq!((r.precision, r.recall, r.weighted_f1, r.mean_ap, r.accuracy), (1.0, 1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn one_category_predicted_everywhere() {
        let ph = phrases(&["a", "b"]);
        let preds = [pred("a", &[0.5, 0.5]), pred("a", &[0.5, 0.5])];
        let r = labeling_metrics(&preds, &phrases(&["a", "b"]), &ph).unwrap();
        assert!((r.weighted_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.categories[1].precision, 0.0);
    }

    #[test]
    fn labeling_errors() {
        let ph = phrases(&["a", "b"]);
        assert!(labeling_metrics(&[], &[], &ph).is_err());
        assert!(labeling_metrics(&[pred("a", &[1.0, 0.0])], &[], &ph).is_err());
        assert!(labeling_metrics(&[pred("c", &[1.0, 0.0])], &phrases(&["a"]), &ph).is_err());
        assert!(labeling_metrics(&[pred("a", &[1.0])], &phrases(&["a"]), &ph).is_err());
    }

    fn scene(labels: &[(&[usize], Option<&str>, f64)]) -> SegmentationResult {
        let spec = GridSpec::new([0.0, 0.0], 1.0, 20, 1, 0.0, 1.0).unwrap();
        let instances = labels
            .iter()
            .enumerate()
            .map(|(k, (on, l, c))| {
                let m = inst(k as u32, Category::Room, on, *c);
                match l {
                    Some(l) => m.with_label(*l),
                    None => m,
                }
            })
            .collect();
        SegmentationResult::new(spec, instances).unwrap()
    }

    #[test]
    fn pipeline_cases() {
        let gt = scene(&[(&[0, 1], Some("kitchen"), 1.0), (&[5, 6], Some("bedroom"), 1.0)]);
        let perfect = scene(&[(&[0, 1], Some("kitchen"), 1.0), (&[5, 6], Some("bedroom"), 1.0)]);
        assert_eq!(pipeline_map(&perfect, &gt, 0.5).unwrap(), 1.0);
        let wrong = scene(&[(&[0, 1], Some("bedroom"), 1.0), (&[5, 6], Some("kitchen"), 1.0)]);
        assert_eq!(pipeline_map(&wrong, &gt, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn pipeline_half_right_on_balanced_set() {
        // Two scenes, each with one kitchen and one bedroom. Every scene gets its
        // first room right and the second wrong.
        let gt = scene(&[(&[0, 1], Some("kitchen"), 1.0), (&[5, 6], Some("bedroom"), 1.0)]);
        let gt2 = scene(&[(&[0, 1], Some("bedroom"), 1.0), (&[5, 6], Some("kitchen"), 1.0)]);
        let p1 = scene(&[(&[0, 1], Some("kitchen"), 1.0), (&[5, 6], Some("kitchen"), 1.0)]);
        let p2 = scene(&[(&[0, 1], Some("bedroom"), 1.0), (&[5, 6], Some("bedroom"), 1.0)]);
        let r = pipeline_report(&[(&p1, &gt), (&p2, &gt2)], 0.5).unwrap();
        // per type: correct prediction ranked first (lower id), wrong second;
        // 1 of 2 ground truths found at precision 1.
        assert!((r.mean_ap - 0.5).abs() < 1e-12, "{}", r.to_table());
    }

    #[test]
    fn tables_render() {
        let gt = scene(&[(&[0, 1], Some("kitchen"), 1.0)]);
        let r = pipeline_report(&[(&gt, &gt)], 0.5).unwrap();
        assert!(r.to_table().contains("kitchen"));
        let seg = segmentation_report(&[(&gt, &gt)], 0.5).unwrap();
        assert_eq!(seg.rows[0].ap, 1.0);
        assert_eq!(seg.mean_ap, 1.0);
        assert!(serde_json::from_str::<ApReport>(&seg.to_json()).is_ok());
    }
}
