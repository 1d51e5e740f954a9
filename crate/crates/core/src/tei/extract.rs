//! Page and region extraction from TEI editions.
//!
//! The walk is a single document-order pass over the text root. Page breaks
//! are milestones: everything after a page break belongs to the new page, so
//! regions still open at a break are split and their remainder is marked as
//! run-on. Body text is whatever no selector claims.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use super::pattern::attr;
use super::rules::{NoteResolution, SelectorRule, SelectorRuleSet};
use crate::error::Result;
use crate::xml::parse_document;
use crate::region::RegionType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionTranscript {
    #[serde(rename = "type")]
    pub region_type: RegionType,
    pub text: String,
    pub reading_order: usize,
    /// Continuation of a region begun on an earlier page.
    pub run_on: bool,
    pub source_path: String,
    /// Column of the page the region started in (0-based).
    #[serde(default)]
    pub column: usize,
    /// Character spans of `<head>` lines within `text`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub heads: Vec<(usize, usize)>,
    /// Number of `<lb>` milestones inside the region.
    #[serde(default)]
    pub line_breaks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRecord {
    pub edition_id: String,
    pub page_index: usize,
    pub printed_page_label: Option<String>,
    #[serde(default)]
    pub label_inferred: bool,
    pub image_ref: Option<String>,
    pub regions: Vec<RegionTranscript>,
}

impl PageRecord {
    pub fn figure_count(&self) -> usize {
        self.regions
            .iter()
            .filter(|r| r.region_type == RegionType::Figure && !r.run_on)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningKind {
    TextBeforeFirstPage,
    DuplicatePageNum,
    DuplicateNoteReference,
    DanglingReference,
    UnreferencedNote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub kind: WarningKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edition {
    pub id: String,
    pub pages: Vec<PageRecord>,
    pub warnings: Vec<ParseWarning>,
}

/// Page label from page-break attributes. Bracketed labels such as `[17]`
/// are editorial inferences and come back with `inferred = true`.
pub fn extract_page_label<'a, I>(attributes: I) -> (Option<String>, bool)
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let Some((_, n)) = attributes.into_iter().find(|(k, _)| *k == "n") else {
        return (None, false);
    };
    let n = n.trim();
    if n.is_empty() {
        return (None, false);
    }
    match n.strip_prefix('[') {
        Some(rest) => {
            let inner = rest.strip_suffix(']').unwrap_or(rest).trim();
            (Some(inner.to_string()), true)
        }
        None => (Some(n.to_string()), false),
    }
}

fn text_root<'a, 'i>(doc: &'a Document<'i>, rules: &SelectorRuleSet) -> Node<'a, 'i> {
    doc.descendants()
        .find(|n| n.is_element() && n.tag_name().name() == rules.text_root)
        .unwrap_or_else(|| doc.root_element())
}

/// Element path with 1-based sibling positions, e.g. `/TEI[1]/text[1]/body[1]/note[2]`.
fn element_path(node: Node) -> String {
    let mut parts: Vec<String> = node
        .ancestors()
        .filter(|n| n.is_element())
        .map(|n| {
            let name = n.tag_name().name();
            let pos = n
                .prev_siblings()
                .skip(1)
                .filter(|s| s.is_element() && s.tag_name().name() == name)
                .count();
            format!("{name}[{}]", pos + 1)
        })
        .collect();
    parts.reverse();
    format!("/{}", parts.join("/"))
}

/// Page of the first reference to every linked note, with diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NoteLinks {
    pub pages: BTreeMap<String, usize>,
    pub warnings: Vec<ParseWarning>,
    first_reference: HashMap<String, roxmltree::NodeId>,
}

fn note_id<'a>(node: Node<'a, '_>) -> Option<&'a str> {
    attr(node, "xml:id").or_else(|| node.attribute("id"))
}

fn reference_tokens<'a>(node: Node<'a, '_>, rules: &'a SelectorRuleSet) -> impl Iterator<Item = &'a str> + 'a {
    rules
        .note_reference_attributes
        .iter()
        .filter_map(move |a| attr(node, a))
        .flat_map(str::split_whitespace)
        .map(|t| t.strip_prefix('#').unwrap_or(t))
}

fn collect_linked_notes<'a, 'i>(
    doc: &'a Document<'i>,
    rules: &SelectorRuleSet,
) -> Vec<(String, Node<'a, 'i>)> {
    let Some(rule) = rules.rule_for(RegionType::Note) else {
        return Vec::new();
    };
    doc.descendants()
        .filter(|n| n.is_element() && rule.pattern.matches(*n))
        .filter_map(|n| note_id(n).map(|id| (id.to_string(), n)))
        .collect()
}

fn is_skipped(node: Node, rules: &SelectorRuleSet, linked: bool) -> bool {
    rules.drop.iter().any(|p| p.matches(node))
        || (linked
            && (rules.notes_container.as_ref().is_some_and(|p| p.matches(node))
                || rules.rule_for(RegionType::Note).is_some_and(|r| r.pattern.matches(node))))
}

/// Attach each linked note to the page holding its first reference mark.
pub fn resolve_linked_notes(xml: &[u8], rules: &SelectorRuleSet) -> Result<NoteLinks> {
    let doc = parse_document(xml)?;
    Ok(resolve_in_document(&doc, rules))
}

fn resolve_in_document(doc: &Document, rules: &SelectorRuleSet) -> NoteLinks {
    let notes = collect_linked_notes(doc, rules);
    let known: HashSet<&str> = notes.iter().map(|(id, _)| id.as_str()).collect();
    let all_ids: HashSet<&str> = doc.descendants().filter_map(note_id).collect();
    let mut links = NoteLinks::default();

    let mut page: Option<usize> = None;
    let mut stack = vec![text_root(doc, rules)];
    // Iterative pre-order walk so that skipped subtrees are never entered.
    let mut order = Vec::new();
    while let Some(n) = stack.pop() {
        order.push(n);
        let children: Vec<_> = n
            .children()
            .filter(|c| c.is_element() && !is_skipped(*c, rules, true))
            .collect();
        stack.extend(children.into_iter().rev());
    }
    for n in order {
        if rules.page_break.matches(n) {
            page = Some(page.map_or(0, |p| p + 1));
        }
        for token in reference_tokens(n, rules) {
            if known.contains(token) {
                match (links.pages.get(token), page) {
                    (Some(first), _) => links.warnings.push(ParseWarning {
                        kind: WarningKind::DuplicateNoteReference,
                        message: format!("note `{token}` referenced again; kept on page {first}"),
                    }),
                    (None, Some(p)) => {
                        links.pages.insert(token.to_string(), p);
                        links.first_reference.insert(token.to_string(), n.id());
                    }
                    (None, None) => links.warnings.push(ParseWarning {
                        kind: WarningKind::DanglingReference,
                        message: format!("reference to note `{token}` precedes the first page break"),
                    }),
                }
            } else if !all_ids.contains(token) {
                links.warnings.push(ParseWarning {
                    kind: WarningKind::DanglingReference,
                    message: format!("IDREF `{token}` matches no element"),
                });
            }
        }
    }
    for (id, _) in &notes {
        if !links.pages.contains_key(id) {
            links.warnings.push(ParseWarning {
                kind: WarningKind::UnreferencedNote,
                message: format!("note `{id}` is never referenced; dropped"),
            });
        }
    }
    links
}

#[derive(Debug, Default)]
struct TextBuf {
    s: String,
    chars: usize,
    pending_space: bool,
}

impl TextBuf {
    fn push(&mut self, t: &str) {
        for c in t.chars() {
            if c.is_whitespace() {
                self.pending_space = self.chars > 0;
            } else {
                if self.pending_space {
                    self.s.push(' ');
                    self.chars += 1;
                    self.pending_space = false;
                }
                self.s.push(c);
                self.chars += 1;
            }
        }
    }

    fn word_break(&mut self) {
        if self.chars > 0 {
            self.pending_space = true;
        }
    }

    fn next_offset(&self) -> usize {
        self.chars + usize::from(self.pending_space)
    }
}

#[derive(Debug)]
struct OpenRegion {
    region: RegionType,
    buf: TextBuf,
    run_on: bool,
    source_path: String,
    column: usize,
    heads: Vec<(usize, usize)>,
    line_breaks: usize,
    seq: usize,
}

/// Elements whose boundaries separate words even without whitespace in the source.
const BLOCK_ELEMENTS: &[&str] = &[
    "ab", "argument", "byline", "cell", "closer", "dateline", "div", "docTitle", "epigraph",
    "figure", "fw", "head", "item", "l", "lg", "list", "mw", "note", "opener", "p", "quote",
    "row", "salute", "signed", "sp", "speaker", "stage", "table", "titlePage", "titlePart",
    "trailer",
];

struct PageBuilder {
    record: PageRecord,
    regions: Vec<(usize, RegionTranscript)>,
}

struct Walker<'r> {
    rules: &'r SelectorRuleSet,
    element_rules: Vec<&'r SelectorRule>,
    attribute_rules: Vec<&'r SelectorRule>,
    edition_id: String,
    pages: Vec<PageBuilder>,
    body: Option<OpenRegion>,
    stack: Vec<OpenRegion>,
    column: usize,
    seq: usize,
    warnings: Vec<ParseWarning>,
    warned_pre_page: bool,
    linked: bool,
    note_text: HashMap<String, (String, String)>,
    first_reference: HashMap<roxmltree::NodeId, Vec<String>>,
}

impl<'r> Walker<'r> {
    fn new(rules: &'r SelectorRuleSet, edition_id: &str) -> Self {
        Walker {
            rules,
            element_rules: rules.rules.iter().filter(|r| r.pattern.attribute().is_none()).collect(),
            attribute_rules: rules.rules.iter().filter(|r| r.pattern.attribute().is_some()).collect(),
            edition_id: edition_id.to_string(),
            pages: Vec::new(),
            body: None,
            stack: Vec::new(),
            column: 0,
            seq: 0,
            warnings: Vec::new(),
            warned_pre_page: false,
            linked: rules.note_resolution == NoteResolution::LinkedIdref,
            note_text: HashMap::new(),
            first_reference: HashMap::new(),
        }
    }

    fn next_seq(&mut self) -> usize {
        self.seq += 1;
        self.seq
    }

    fn open(&mut self, region: RegionType, node: Node, run_on: bool) -> OpenRegion {
        OpenRegion {
            region,
            buf: TextBuf::default(),
            run_on,
            source_path: element_path(node),
            column: self.column,
            heads: Vec::new(),
            line_breaks: 0,
            seq: self.next_seq(),
        }
    }

    fn ensure_body(&mut self, context: Node) -> Option<&mut OpenRegion> {
        if self.pages.is_empty() {
            return None;
        }
        if self.body.is_none() {
            let path = element_path(context);
            let seq = self.next_seq();
            self.body = Some(OpenRegion {
                region: RegionType::Body,
                buf: TextBuf::default(),
                run_on: false,
                source_path: path,
                column: self.column,
                heads: Vec::new(),
                line_breaks: 0,
                seq,
            });
        }
        self.body.as_mut()
    }

    fn target(&mut self, context: Node) -> Option<&mut OpenRegion> {
        if !self.stack.is_empty() {
            return self.stack.last_mut();
        }
        self.ensure_body(context)
    }

    fn text(&mut self, node: Node, t: &str) {
        if t.trim().is_empty() {
            if let Some(r) = self.stack.last_mut().or(self.body.as_mut()) {
                r.buf.word_break();
            }
            return;
        }
        let parent = node.parent_element().unwrap_or(node);
        match self.target(parent) {
            Some(r) => r.buf.push(t),
            None => self.warn_pre_page(),
        }
    }

    fn warn_pre_page(&mut self) {
        if !self.warned_pre_page {
            self.warned_pre_page = true;
            self.warnings.push(ParseWarning {
                kind: WarningKind::TextBeforeFirstPage,
                message: "text before the first page break is not assigned to any page".into(),
            });
        }
    }

    fn emit(&mut self, r: OpenRegion) {
        let keep = r.buf.chars > 0 || (r.region == RegionType::Figure && !r.run_on);
        if !keep {
            return;
        }
        let Some(page) = self.pages.last_mut() else {
            self.warn_pre_page();
            return;
        };
        if r.region == RegionType::PageNum
            && page
                .regions
                .iter()
                .any(|(_, x)| x.region_type == RegionType::PageNum && x.column == r.column)
        {
            self.warnings.push(ParseWarning {
                kind: WarningKind::DuplicatePageNum,
                message: format!(
                    "second page number `{}` on page {} column {} dropped",
                    r.buf.s, page.record.page_index, r.column
                ),
            });
            return;
        }
        page.regions.push((
            r.seq,
            RegionTranscript {
                region_type: r.region,
                text: r.buf.s,
                reading_order: 0,
                run_on: r.run_on,
                source_path: r.source_path,
                column: r.column,
                heads: r.heads,
                line_breaks: r.line_breaks,
            },
        ));
    }

    fn page_break(&mut self, node: Node) {
        if let Some(body) = self.body.take() {
            self.emit(body);
        }
        // Split every open float: the part so far stays on the old page.
        let open = std::mem::take(&mut self.stack);
        let mut continued = Vec::with_capacity(open.len());
        for r in open {
            let cont = OpenRegion {
                region: r.region,
                buf: TextBuf::default(),
                run_on: true,
                source_path: r.source_path.clone(),
                column: 0,
                heads: Vec::new(),
                line_breaks: 0,
                seq: 0,
            };
            self.emit(r);
            continued.push(cont);
        }
        for mut c in continued {
            c.seq = self.next_seq();
            self.stack.push(c);
        }
        let (label, inferred) = extract_page_label(node.attributes().map(|a| (a.name(), a.value())));
        self.pages.push(PageBuilder {
            record: PageRecord {
                edition_id: self.edition_id.clone(),
                page_index: self.pages.len(),
                printed_page_label: label,
                label_inferred: inferred,
                image_ref: node.attribute("facs").map(str::to_string),
                regions: Vec::new(),
            },
            regions: Vec::new(),
        });
        self.column = 0;
    }

    fn column_break(&mut self) {
        if let Some(body) = self.body.take() {
            self.emit(body);
        }
        self.column += 1;
    }

    fn attribute_regions(&mut self, node: Node) {
        let hits: Vec<(RegionType, String)> = self
            .attribute_rules
            .iter()
            .filter(|r| r.pattern.matches(node))
            .filter_map(|r| {
                r.pattern
                    .select_attribute(node)
                    .map(|v| (r.region, v.to_string()))
            })
            .collect();
        for (region, value) in hits {
            let mut r = self.open(region, node, false);
            r.buf.push(&value);
            self.emit(r);
        }
    }

    fn linked_references(&mut self, node: Node) {
        let Some(ids) = self.first_reference.remove(&node.id()) else {
            return;
        };
        for id in ids {
            if let Some((text, path)) = self.note_text.get(&id).cloned() {
                let seq = self.next_seq();
                let mut buf = TextBuf::default();
                buf.push(&text);
                self.emit(OpenRegion {
                    region: RegionType::Note,
                    buf,
                    run_on: false,
                    source_path: path,
                    column: self.column,
                    heads: Vec::new(),
                    line_breaks: 0,
                    seq,
                });
            }
        }
    }

    fn visit_children(&mut self, node: Node) {
        for c in node.children() {
            if c.is_element() {
                self.element(c);
            } else if let Some(t) = c.text().filter(|_| c.is_text()) {
                self.text(c, t);
            }
        }
    }

    fn word_break(&mut self) {
        if let Some(r) = self.stack.last_mut().or(self.body.as_mut()) {
            r.buf.word_break();
        }
    }

    fn element(&mut self, e: Node) {
        let block = BLOCK_ELEMENTS.contains(&e.tag_name().name());
        if block {
            self.word_break();
        }
        self.element_inner(e);
        if block {
            self.word_break();
        }
    }

    fn element_inner(&mut self, e: Node) {
        let rules = self.rules;
        if rules.page_break.matches(e) {
            self.page_break(e);
            self.attribute_regions(e);
            self.visit_children(e);
            return;
        }
        if rules.column_break.as_ref().is_some_and(|p| p.matches(e)) {
            self.column_break();
            self.attribute_regions(e);
            self.visit_children(e);
            return;
        }
        if is_skipped(e, rules, self.linked) {
            return;
        }
        if self.linked {
            self.linked_references(e);
        }
        let name = e.tag_name().name();
        if name == "lb" {
            if let Some(r) = self.stack.last_mut().or(self.body.as_mut()) {
                r.line_breaks += 1;
                r.buf.word_break();
            }
            self.visit_children(e);
            return;
        }
        if let Some(rule) = self.element_rules.iter().find(|r| r.pattern.matches(e)).copied() {
            let mut run_on = false;
            if rule.region == RegionType::Note {
                run_on = rules.run_on_attributes.iter().any(|a| attr(e, a).is_some());
            }
            let region = self.open(rule.region, e, run_on);
            self.stack.push(region);
            let depth = self.stack.len();
            self.visit_children(e);
            debug_assert_eq!(self.stack.len(), depth);
            let region = self.stack.pop().expect("region stack underflow");
            self.emit(region);
            self.attribute_regions(e);
            return;
        }
        self.attribute_regions(e);
        if name == "head" && self.stack.is_empty() {
            if let Some(body) = self.ensure_body(e) {
                let (seq, start) = (body.seq, body.buf.next_offset());
                self.visit_children(e);
                if let Some(body) = self.body.as_mut().filter(|b| b.seq == seq) {
                    let end = body.buf.chars;
                    if end > start {
                        body.heads.push((start, end));
                    }
                }
                return;
            }
        }
        self.visit_children(e);
    }

    fn finish(mut self) -> (Vec<PageRecord>, Vec<ParseWarning>) {
        if let Some(body) = self.body.take() {
            self.emit(body);
        }
        while let Some(r) = self.stack.pop() {
            self.emit(r);
        }
        let pages = self
            .pages
            .into_iter()
            .map(|mut p| {
                let (mut bodies, mut floats): (Vec<_>, Vec<_>) = p
                    .regions
                    .into_iter()
                    .partition(|(_, r)| r.region_type == RegionType::Body);
                bodies.sort_by_key(|(s, _)| *s);
                floats.sort_by_key(|(s, _)| *s);
                p.record.regions = bodies
                    .into_iter()
                    .chain(floats)
                    .enumerate()
                    .map(|(i, (_, mut r))| {
                        r.reading_order = i;
                        r
                    })
                    .collect();
                p.record
            })
            .collect();
        (pages, self.warnings)
    }
}

/// Collapsed text content of a subtree, honouring the drop list.
fn subtree_text(node: Node, rules: &SelectorRuleSet) -> String {
    let mut buf = TextBuf::default();
    fn walk(n: Node, rules: &SelectorRuleSet, buf: &mut TextBuf) {
        for c in n.children() {
            if c.is_element() {
                if rules.drop.iter().any(|p| p.matches(c)) {
                    continue;
                }
                let name = c.tag_name().name();
                let block = name == "lb" || BLOCK_ELEMENTS.contains(&name);
                if block {
                    buf.word_break();
                }
                walk(c, rules, buf);
                if block {
                    buf.word_break();
                }
            } else if c.is_text() {
                buf.push(c.text().unwrap_or(""));
            }
        }
    }
    walk(node, rules, &mut buf);
    buf.s
}

/// Parse one edition into page records.
pub fn parse_edition(xml: &[u8], rules: &SelectorRuleSet, edition_id: &str) -> Result<Edition> {
    let doc = parse_document(xml)?;
    let mut walker = Walker::new(rules, edition_id);
    if walker.linked {
        let links = resolve_in_document(&doc, rules);
        for (id, node) in collect_linked_notes(&doc, rules) {
            walker
                .note_text
                .insert(id, (subtree_text(node, rules), element_path(node)));
        }
        let mut by_node: BTreeMap<String, roxmltree::NodeId> = BTreeMap::new();
        by_node.extend(links.first_reference.iter().map(|(k, v)| (k.clone(), *v)));
        for (id, node) in by_node {
            walker.first_reference.entry(node).or_default().push(id);
        }
        walker.warnings.extend(links.warnings);
    }
    walker.visit_children(text_root(&doc, rules));
    let (pages, warnings) = walker.finish();
    Ok(Edition {
        id: edition_id.to_string(),
        pages,
        warnings,
    })
}

/// Region types present on a page (used by region-level evaluation).
pub fn page_region_types(page: &PageRecord) -> BTreeSet<RegionType> {
    page.regions.iter().map(|r| r.region_type).collect()
}
