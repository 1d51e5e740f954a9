use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::io::{
    expand_inputs, file_stem, load_annotations, page_key, read_ndjson, write_json, write_ndjson, write_string,
    RunArtifacts,
};
use super::*;
use crate::align::{align_page, match_books, AlignmentParams, PageAlignment};
use crate::annotate::{build_page_annotation, emit_annotation, DetectionFile, PageAnnotation};
use crate::geom::BBox;
use crate::metrics::{
    detection_ap, detections_from, gt_boxes, merge_per_type, pair_pages, pixel_metrics, region_level_retrieval,
    scatter_csv, scatter_svg, tally_page, word_level_retrieval, ConfusionTally, PerType, RetrievalCounts,
    ScatterPoint,
};
use crate::ocr::{normalize_text, parse_hocr, OcrPage};
use crate::region::{RegionType, NUM_LABELS};
use crate::selftrain::select_pages;
use crate::tei::{parse_edition, PageRecord};

pub(super) fn dispatch(cmd: &Command, cfg: PipelineConfig) -> Result<()> {
    match cmd {
        Command::Extract(a) => extract(a, cfg),
        Command::Ingest(a) => ingest(a, cfg),
        Command::Align(a) => align(a, cfg),
        Command::MatchBooks(a) => match_books_cmd(a, cfg),
        Command::Annotate(a) => annotate(a, cfg),
        Command::EvalPixel(a) => eval_pixel(a, cfg),
        Command::EvalWord(a) => eval_word(a, cfg),
        Command::EvalRegion(a) => eval_region(a, cfg),
        Command::EvalAp(a) => eval_ap(a, cfg),
        Command::SelfTrain(SelfTrainCommand::Select(a)) => select(a, cfg),
        Command::Correlate(a) => correlate(a, cfg),
    }
}

fn read_bytes(p: &Path) -> Result<Vec<u8>> {
    fs::read(p).with_context(|| format!("cannot read {}", p.display()))
}

fn load_pairs(cfg: &PipelineConfig, pair: &PairArgs) -> Result<(Vec<PageAnnotation>, Vec<PageAnnotation>)> {
    let strip = |v: Vec<(String, PageAnnotation)>| v.into_iter().map(|(_, p)| p).collect::<Vec<_>>();
    Ok((
        strip(load_annotations(&cfg.resolve_input(&pair.reference))?),
        strip(load_annotations(&cfg.resolve_input(&pair.predicted))?),
    ))
}

fn counts_json(c: &RetrievalCounts) -> Value {
    json!({"tp": c.tp, "fp": c.fp, "fn": c.fn_, "recall": c.recall(), "precision": c.precision(), "f1": c.f1()})
}

fn per_type_json(per_type: &PerType) -> Value {
    Value::Object(per_type.iter().map(|(t, c)| (t.to_string(), counts_json(c))).collect())
}

/// Columns: `type,tp,fp,fn,recall,precision,f1`, one row per type plus `all`.
fn retrieval_csv(per_type: &PerType) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["type", "tp", "fp", "fn", "recall", "precision", "f1"])?;
    let mut all = RetrievalCounts::default();
    let rows = per_type.iter().map(|(t, c)| (t.to_string(), *c));
    for (name, c) in rows.collect::<Vec<_>>() {
        all.add(&c);
        w.write_record(retrieval_row(&name, &c))?;
    }
    w.write_record(retrieval_row("all", &all))?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn retrieval_row(name: &str, c: &RetrievalCounts) -> Vec<String> {
    vec![
        name.to_string(),
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.recall().to_string(),
        c.precision().to_string(),
        c.f1().to_string(),
    ]
}

fn extract(a: &ExtractArgs, mut cfg: PipelineConfig) -> Result<()> {
    if let Some(r) = &a.rules {
        cfg.rules = r.clone();
    }
    let rules = cfg.rule_set()?;
    let inputs: Vec<_> = a.inputs.iter().map(|p| cfg.resolve_input(p)).collect();
    let files = expand_inputs(&inputs, &["xml", "tei"])?;
    let editions = files
        .par_iter()
        .map(|f| {
            parse_edition(&read_bytes(f)?, &rules, &file_stem(f)).with_context(|| format!("{}", f.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pages: Vec<PageRecord> = Vec::new();
    let mut warnings: BTreeMap<String, usize> = BTreeMap::new();
    let mut by_type: BTreeMap<String, usize> = BTreeMap::new();
    for ed in editions {
        for w in &ed.warnings {
            tracing::warn!(edition = ed.id, kind = ?w.kind, "{}", w.message);
            *warnings.entry(serde_json::to_value(w.kind)?.as_str().unwrap_or_default().to_string()).or_default() += 1;
        }
        for p in &ed.pages {
            for r in &p.regions {
                *by_type.entry(r.region_type.to_string()).or_default() += 1;
            }
        }
        pages.extend(ed.pages);
    }
    let out = cfg.resolve_output(&a.output);
    write_ndjson(&out, &pages)?;
    let summary = json!({
        "command": "extract",
        "editions": files.len(),
        "pages": pages.len(),
        "regions": by_type,
        "warnings": warnings,
    });
    tracing::info!(pages = pages.len(), output = %out.display(), "extract done");
    RunArtifacts::for_file(&out, "extract").write(&summary, &cfg)
}

fn ingest(a: &IngestArgs, cfg: PipelineConfig) -> Result<()> {
    let inputs: Vec<_> = a.inputs.iter().map(|p| cfg.resolve_input(p)).collect();
    let mut warnings = 0usize;
    let mut clamped = 0usize;
    let pages: Vec<OcrPage> = match a.format {
        OcrFormat::Hocr => {
            let files = expand_inputs(&inputs, &["hocr", "html", "xhtml", "xml"])?;
            let parsed = files
                .par_iter()
                .map(|f| {
                    let (mut page, report) =
                        parse_hocr(&read_bytes(f)?).with_context(|| format!("{}", f.display()))?;
                    if page.image.is_empty() {
                        page.image = file_stem(f);
                    }
                    Ok((page, report))
                })
                .collect::<Result<Vec<_>>>()?;
            parsed
                .into_iter()
                .map(|(page, report)| {
                    for w in &report.warnings {
                        tracing::warn!(page = page.image, "{w}");
                    }
                    warnings += report.warnings.len();
                    clamped += report.clamped;
                    page
                })
                .collect()
        }
        OcrFormat::Json => {
            let files = expand_inputs(&inputs, &["ndjson", "jsonl", "json"])?;
            let mut pages = Vec::new();
            for f in files {
                for mut page in read_ndjson::<OcrPage>(&f)? {
                    clamped += page.enforce_geometry();
                    pages.push(page);
                }
            }
            pages
        }
    };
    let out = cfg.resolve_output(&a.output);
    write_ndjson(&out, &pages)?;
    let summary = json!({
        "command": "ingest",
        "pages": pages.len(),
        "lines": pages.iter().map(|p| p.lines.len()).sum::<usize>(),
        "words": pages.iter().map(|p| p.words().count()).sum::<usize>(),
        "clamped_boxes": clamped,
        "warnings": warnings,
    });
    RunArtifacts::for_file(&out, "ingest").write(&summary, &cfg)
}

fn align(a: &AlignArgs, mut cfg: PipelineConfig) -> Result<()> {
    if let Some(p) = &a.params {
        let p = cfg.resolve_input(p);
        let s = fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
        cfg.align = AlignmentParams::from_toml_str(&s).with_context(|| format!("{}", p.display()))?;
    }
    let records: Vec<PageRecord> = read_ndjson(&cfg.resolve_input(&a.edition))?;
    let ocr: Vec<OcrPage> = read_ndjson(&cfg.resolve_input(&a.ocr))?;
    let by_key: BTreeMap<&str, &OcrPage> = ocr.iter().map(|p| (page_key(&p.image), p)).collect();
    let mut jobs = Vec::new();
    let mut without_ocr = Vec::new();
    for r in &records {
        let id = format!("{}#{}", r.edition_id, r.page_index);
        match r.image_ref.as_deref().and_then(|i| by_key.get(page_key(i))) {
            Some(o) => jobs.push((r, *o)),
            None => without_ocr.push(id),
        }
    }
    for id in &without_ocr {
        tracing::warn!(page = id, "no OCR page for edition page");
    }
    let params = &cfg.align;
    let aligned = jobs
        .par_iter()
        .map(|(r, o)| {
            align_page(r, o, params).with_context(|| format!("aligning {}#{} to {}", r.edition_id, r.page_index, o.image))
        })
        .collect::<Result<Vec<PageAlignment>>>()?;
    let out = cfg.resolve_output(&a.output);
    write_ndjson(&out, &aligned)?;
    let unlocated: Vec<Value> = aligned
        .iter()
        .flat_map(|p| {
            p.unlocated()
                .map(move |s| json!({"page": p.image, "region": s.region, "type": s.region_type.to_string()}))
        })
        .collect();
    let summary = json!({
        "command": "align",
        "pages": aligned.len(),
        "pages_without_ocr": without_ocr,
        "regions": aligned.iter().map(|p| p.regions.len()).sum::<usize>(),
        "unlocated_regions": unlocated,
        "lines": aligned.iter().map(|p| p.lines.len()).sum::<usize>(),
        "lines_assigned": aligned.iter().flat_map(|p| &p.lines).filter(|l| l.region.is_some()).count(),
        "matched_chars": aligned.iter().map(|p| p.matched_chars).sum::<usize>(),
        "gt_chars": aligned.iter().map(|p| p.gt_len).sum::<usize>(),
    });
    RunArtifacts::for_file(&out, "align").write(&summary, &cfg)
}

fn edition_text(r: &PageRecord) -> String {
    let mut regions: Vec<_> = r.regions.iter().collect();
    regions.sort_by_key(|x| x.reading_order);
    regions.iter().map(|x| x.text.as_str()).collect::<Vec<_>>().join("\n")
}

fn match_books_cmd(a: &MatchBooksArgs, mut cfg: PipelineConfig) -> Result<()> {
    if let Some(t) = a.page_threshold {
        cfg.books.page_threshold = t;
    }
    let scan_path = cfg.resolve_input(&a.scan);
    let scan: Vec<OcrPage> = read_ndjson(&scan_path)?;
    let edition: Vec<PageRecord> = read_ndjson(&cfg.resolve_input(&a.edition))?;
    let norm = &cfg.align.normalization;
    let scan_text: Vec<String> = scan.iter().map(|p| normalize_text(&p.text(), norm)).collect();
    let ed_text: Vec<String> = edition.iter().map(|r| normalize_text(&edition_text(r), norm)).collect();
    let edition_id = edition.first().map(|r| r.edition_id.clone()).unwrap_or_else(|| file_stem(&a.edition));
    let report = match_books(&file_stem(&scan_path), &scan_text, &edition_id, &ed_text, &cfg.align, &cfg.books)?;
    let out = cfg.resolve_output(&a.output);
    write_json(&out, &report)?;
    let mut summary = serde_json::to_value(&report)?;
    if let Value::Object(m) = &mut summary {
        m.remove("matches");
        m.insert("command".into(), "match-books".into());
        m.insert("scan_pages".into(), scan.len().into());
        m.insert("edition_pages".into(), edition.len().into());
    }
    tracing::info!(accepted = report.accepted, "match-books done");
    RunArtifacts::for_file(&out, "match-books").write(&summary, &cfg)
}

fn annotate(a: &AnnotateArgs, mut cfg: PipelineConfig) -> Result<()> {
    if a.rect {
        cfg.annotate.rect = true;
    }
    let aligned: Vec<PageAlignment> = read_ndjson(&cfg.resolve_input(&a.alignments))?;
    let detections: DetectionFile = match &a.detections {
        Some(p) => {
            let p = cfg.resolve_input(p);
            let s = fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str(&s).with_context(|| format!("{}: bad detection file", p.display()))?
        }
        None => DetectionFile::new(),
    };
    let det_by_key: BTreeMap<&str, &[_]> = detections.iter().map(|(k, v)| (page_key(k), v.as_slice())).collect();
    let out = cfg.resolve_output(&a.output);
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let built: Vec<_> = aligned
        .par_iter()
        .map(|p| {
            let dets = det_by_key.get(page_key(&p.image)).copied().unwrap_or(&[]);
            build_page_annotation(p, dets, &cfg.annotate)
        })
        .collect();
    let mut by_type: BTreeMap<String, usize> = BTreeMap::new();
    let mut unlocated = Vec::new();
    let mut under_detected = Vec::new();
    let mut warnings = 0usize;
    for (page, report) in &built {
        let (text, clamp_warnings) = emit_annotation(page);
        write_string(&out.join(page.file_name()), &text)?;
        for w in report.warnings.iter().chain(&clamp_warnings) {
            tracing::warn!(page = page.image, "{w}");
        }
        warnings += report.warnings.len() + clamp_warnings.len();
        for r in &page.regions {
            *by_type.entry(r.region_type.to_string()).or_default() += 1;
        }
        unlocated.extend(report.unlocated.iter().map(|i| json!({"page": page.image, "region": i})));
        if report.under_detected {
            under_detected.push(page.image.clone());
        }
    }
    let summary = json!({
        "command": "annotate",
        "pages": built.len(),
        "regions": by_type,
        "unlocated_regions": unlocated,
        "under_detected_pages": under_detected,
        "warnings": warnings,
    });
    RunArtifacts::for_dir(&out, "annotate").write(&summary, &cfg)
}

fn eval_pixel(a: &EvalPixelArgs, mut cfg: PipelineConfig) -> Result<()> {
    if let Some(s) = a.scale {
        cfg.scale = s;
    }
    if a.exclude_background {
        cfg.metrics.exclude_background = true;
    }
    cfg.validate()?;
    let (reference, predicted) = load_pairs(&cfg, &a.pair)?;
    let pairs = pair_pages(&reference, &predicted)?;
    let tally = pairs
        .par_iter()
        .map(|(r, p)| tally_page(r, p, cfg.scale))
        .try_reduce(|| ConfusionTally::new(NUM_LABELS), |x, y| Ok(x.merge(&y)))?;
    let m = pixel_metrics(&tally, cfg.metrics.exclude_background)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "name", "pixels", "acc", "iu"])?;
    for c in &m.per_class {
        w.write_record([c.class.to_string(), c.name.clone(), c.pixels.to_string(), c.acc.to_string(), c.iu.to_string()])?;
    }
    let out = cfg.resolve_output(&a.output);
    write_string(&out, &String::from_utf8(w.into_inner()?)?)?;
    let per_class: serde_json::Map<String, Value> = m
        .per_class
        .iter()
        .map(|c| (c.name.clone(), json!({"pixels": c.pixels, "acc": c.acc, "iu": c.iu})))
        .collect();
    let summary = json!({
        "command": "eval-pixel",
        "pages": pairs.len(),
        "scale": cfg.scale,
        "exclude_background": cfg.metrics.exclude_background,
        "p_acc": m.p_acc,
        "m_acc": m.m_acc,
        "m_iu": m.m_iu,
        "f_iu": m.f_iu,
        "per_class": per_class,
    });
    RunArtifacts::for_file(&out, "eval-pixel").write(&summary, &cfg)
}

fn words_by_page(path: &Path) -> Result<BTreeMap<String, Vec<BBox>>> {
    let ocr: Vec<OcrPage> = read_ndjson(path)?;
    Ok(ocr
        .iter()
        .map(|p| (page_key(&p.image).to_string(), p.words().map(|w| w.bbox).collect()))
        .collect())
}

fn eval_word(a: &EvalWordArgs, cfg: PipelineConfig) -> Result<()> {
    let (reference, predicted) = load_pairs(&cfg, &a.pair)?;
    let pairs = pair_pages(&reference, &predicted)?;
    let words = words_by_page(&cfg.resolve_input(&a.ocr))?;
    let missing: Vec<&str> = pairs
        .iter()
        .map(|(r, _)| r.image.as_str())
        .filter(|i| !words.contains_key(page_key(i)))
        .collect();
    if !missing.is_empty() {
        bail!("no OCR words for pages: {}", missing.join(", "));
    }
    let per_page: Vec<PerType> = pairs
        .par_iter()
        .map(|(r, p)| word_level_retrieval(r, p, &words[page_key(&r.image)]))
        .collect();
    let mut per_type = PerType::new();
    for p in &per_page {
        merge_per_type(&mut per_type, p);
    }
    let out = cfg.resolve_output(&a.output);
    write_string(&out, &retrieval_csv(&per_type)?)?;
    let summary = json!({"command": "eval-word", "pages": pairs.len(), "per_type": per_type_json(&per_type)});
    RunArtifacts::for_file(&out, "eval-word").write(&summary, &cfg)
}

fn eval_region(a: &EvalRegionArgs, mut cfg: PipelineConfig) -> Result<()> {
    if a.min_iou.is_some() {
        cfg.metrics.gate.min_iou = a.min_iou;
    }
    if a.min_score.is_some() {
        cfg.metrics.gate.min_score = a.min_score;
    }
    let (reference, predicted) = load_pairs(&cfg, &a.pair)?;
    let r = region_level_retrieval(&reference, &predicted, &cfg.metrics.gate)?;
    let out = cfg.resolve_output(&a.output);
    write_string(&out, &retrieval_csv(&r.per_type)?)?;
    let summary = json!({
        "command": "eval-region",
        "pages": r.per_page.len(),
        "gate": cfg.metrics.gate,
        "per_type": per_type_json(&r.per_type),
    });
    RunArtifacts::for_file(&out, "eval-region").write(&summary, &cfg)
}

fn eval_ap(a: &EvalApArgs, cfg: PipelineConfig) -> Result<()> {
    let (reference, predicted) = load_pairs(&cfg, &a.pair)?;
    pair_pages(&reference, &predicted)?;
    let result = detection_ap(&gt_boxes(&reference), &detections_from(&predicted));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "gt_count", "detections", "ap", "ap50", "ap75"])?;
    for (class, c) in &result.per_class {
        w.write_record([
            class.clone(),
            c.gt_count.to_string(),
            c.detections.to_string(),
            c.ap.to_string(),
            c.ap_at[0].to_string(),
            c.ap_at[5].to_string(),
        ])?;
    }
    let out = cfg.resolve_output(&a.output);
    write_string(&out, &String::from_utf8(w.into_inner()?)?)?;
    let summary = json!({
        "command": "eval-ap",
        "pages": reference.len(),
        "map": result.map,
        "per_class": result.per_class.iter().map(|(k, c)| (k.clone(), json!({"ap": c.ap, "ap_at": c.ap_at}))).collect::<serde_json::Map<_, _>>(),
        "without_ground_truth": result.without_ground_truth,
    });
    RunArtifacts::for_file(&out, "eval-ap").write(&summary, &cfg)
}

fn select(a: &SelectArgs, mut cfg: PipelineConfig) -> Result<()> {
    if let Some(t) = a.iou {
        cfg.selftrain.iou_threshold = t;
    }
    if a.cap.is_some() {
        cfg.selftrain.per_layout_cap = a.cap;
    }
    if a.lenient {
        cfg.selftrain.require_no_extra_predictions = false;
    }
    cfg.validate()?;
    let gt = load_annotations(&cfg.resolve_input(&a.gt))?;
    let pred = load_annotations(&cfg.resolve_input(&a.pred))?;
    let sources: BTreeMap<&str, &str> = pred.iter().map(|(s, p)| (p.image.as_str(), s.as_str())).collect();
    let gt_pages: Vec<PageAnnotation> = gt.iter().map(|(_, p)| p.clone()).collect();
    let pred_pages: Vec<PageAnnotation> = pred.iter().map(|(_, p)| p.clone()).collect();
    let report = select_pages(&gt_pages, &pred_pages, &cfg.selftrain, cfg.seed)?;
    let files: Vec<&str> = report.selected.iter().map(|s| sources[s.page.as_str()]).collect();
    let out = cfg.resolve_output(&a.output);
    write_json(&out, &json!({"policy": cfg.selftrain, "report": report, "files": files}))?;
    let summary = json!({
        "command": "self-train select",
        "pages": report.pages_seen,
        "selected": report.selected.len(),
        "layouts": report.layouts,
        "rejections": report.rejections,
    });
    tracing::info!(selected = report.selected.len(), pages = report.pages_seen, "selection done");
    RunArtifacts::for_file(&out, "self-train").write(&summary, &cfg)
}

/// IU of one class within a single-page tally; `None` if absent on both sides.
fn page_iu(t: &ConfusionTally, class: usize) -> Option<f64> {
    let union = t.t(class) + t.predicted(class) - t.n(class, class);
    (union > 0).then(|| t.n(class, class) as f64 / union as f64)
}

fn correlate(a: &CorrelateArgs, mut cfg: PipelineConfig) -> Result<()> {
    if let Some(s) = a.scale {
        cfg.scale = s;
    }
    cfg.validate()?;
    let (reference, predicted) = load_pairs(&cfg, &a.pair)?;
    let pairs = pair_pages(&reference, &predicted)?;
    let words = words_by_page(&cfg.resolve_input(&a.ocr))?;
    let per_page = pairs
        .par_iter()
        .map(|(r, p)| {
            let tally = tally_page(r, p, cfg.scale)?;
            let w = words.get(page_key(&r.image)).map(Vec::as_slice).unwrap_or(&[]);
            let wr = word_level_retrieval(r, p, w);
            let points: Vec<(RegionType, ScatterPoint)> = wr
                .iter()
                .filter_map(|(t, c)| {
                    let iu = page_iu(&tally, t.label() as usize)?;
                    Some((*t, ScatterPoint { page: r.image.clone(), x: iu, y: c.f1() }))
                })
                .collect();
            Ok(points)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_type: BTreeMap<RegionType, Vec<ScatterPoint>> = BTreeMap::new();
    for (t, p) in per_page.into_iter().flatten() {
        by_type.entry(t).or_default().push(p);
    }
    let out = cfg.resolve_output(&a.output);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["type", "n", "r", "p_value"])?;
    let mut per_type = serde_json::Map::new();
    for (t, points) in &by_type {
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
        let c = crate::metrics::pearson(&xs, &ys);
        let (r, pv) = match &c {
            Ok(c) => (Some(c.r), Some(c.p_value)),
            Err(e) => {
                tracing::warn!(region_type = %t, "{e}");
                (None, None)
            }
        };
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([t.to_string(), points.len().to_string(), fmt(r), fmt(pv)])?;
        per_type.insert(t.to_string(), json!({"n": points.len(), "r": r, "p_value": pv}));
        write_string(&out.join(format!("scatter-{t}.csv")), &scatter_csv(points))?;
        let title = format!("{t}: pixel IU vs word F1");
        if let Some(svg) = scatter_svg(points, &title, "pixel IU", "word F1") {
            write_string(&out.join(format!("scatter-{t}.svg")), &svg)?;
        }
    }
    write_string(&out.join("correlation.csv"), &String::from_utf8(w.into_inner()?)?)?;
    let summary = json!({"command": "correlate", "pages": pairs.len(), "scale": cfg.scale, "per_type": per_type});
    RunArtifacts::for_dir(&out, "correlate").write(&summary, &cfg)
}
