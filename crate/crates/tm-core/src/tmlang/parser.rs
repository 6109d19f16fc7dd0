//! Recursive-descent parser for TM-language text.
//!
//! Dot disambiguation:
//! * Name followed by Name — containment (child thimac).
//! * Name followed by a stage keyword — that thimac's stage, opening its
//!   machine context.
//! * keyword followed by keyword — intra-machine flow arc.
//! * `transfer` followed by a Name — inter-machine flow from the current
//!   transfer into the named thimac's transfer(input)/receive chain.
//! * `input`/`output` mark the side of the preceding `transfer`.
//!
//! `receive` immediately followed by `arrive` or `accept` is a grouping
//! label for the refined form and produces no stage of its own. A trailing
//! `*` is decoration and is stripped. `-->` binds full paths and connects
//! their final stages with a trigger arc.

use thiserror::Error;

use super::{SourceSpan, TmDocument, TmPath, TmSegment, TmStatement};
use crate::model::{Direction, ModelError, StageId, StageKind, StaticModel, ThimacId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownToken(String),
    DanglingDot,
    EmptyPath,
    EmptyStatementSide,
    ReservedWord(String),
    StatementMustBeginWithName,
    MarkerWithoutTransfer,
    NameAfterNonTransfer(String),
    TriggerNeedsStage,
    Model(ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at statement {}, bytes {}..{}: {}", span.statement, span.start, span.end, describe(kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::UnknownToken(t) => format!("unknown token {t:?}"),
        ParseErrorKind::DanglingDot => "dangling dot".to_string(),
        ParseErrorKind::EmptyPath => "empty path".to_string(),
        ParseErrorKind::EmptyStatementSide => "empty side of \"-->\"".to_string(),
        ParseErrorKind::ReservedWord(w) => format!("{w:?} is reserved"),
        ParseErrorKind::StatementMustBeginWithName => {
            "statement must begin with a thimac name or the Flow header".to_string()
        }
        ParseErrorKind::MarkerWithoutTransfer => {
            "input/output markers must follow a transfer".to_string()
        }
        ParseErrorKind::NameAfterNonTransfer(n) => {
            format!("name {n:?} may only follow a transfer stage here")
        }
        ParseErrorKind::TriggerNeedsStage => {
            "trigger paths must end at a stage, not a bare thimac".to_string()
        }
        ParseErrorKind::Model(e) => e.to_string(),
    }
}

impl ParseError {
    fn new(kind: ParseErrorKind, span: SourceSpan) -> ParseError {
        ParseError { kind, span }
    }
}

/// Parses TM-language text into its surface document and the merged static
/// model. Repeated mentions of a thimac or stage unify to one node.
pub fn parse(text: &str) -> Result<(TmDocument, StaticModel), ParseError> {
    let mut document = TmDocument::default();
    let mut model = StaticModel::new();
    let mut offset = 0usize;
    let mut statement_index = 0usize;

    for line in text.split('\n') {
        let line_start = offset;
        offset += line.len() + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let trim_start = line_start + (line.len() - line.trim_start().len());
        let statement = parse_statement(trimmed, statement_index, trim_start, &mut model)?;
        document.statements.push(statement);
        statement_index += 1;
    }
    Ok((document, model))
}

fn parse_statement(
    line: &str,
    statement: usize,
    base: usize,
    model: &mut StaticModel,
) -> Result<TmStatement, ParseError> {
    // Strip decoration: any trailing '*', at most one trailing '.', then
    // trailing '*' again ("output*." and "output.*" both reduce).
    let mut body = line;
    body = body.trim_end_matches('*').trim_end();
    if let Some(stripped) = body.strip_suffix('.') {
        body = stripped.trim_end();
    }
    body = body.trim_end_matches('*').trim_end();
    if body.is_empty() {
        return Err(ParseError::new(
            ParseErrorKind::EmptyPath,
            SourceSpan {
                statement,
                start: base,
                end: base + line.len(),
            },
        ));
    }

    // Split into paths on "-->".
    let mut raw_paths: Vec<(usize, &str)> = Vec::new();
    let mut rest = body;
    let mut rest_offset = 0usize;
    loop {
        match rest.find("-->") {
            Some(pos) => {
                raw_paths.push((rest_offset, &rest[..pos]));
                rest_offset += pos + 3;
                rest = &rest[pos + 3..];
            }
            None => {
                raw_paths.push((rest_offset, rest));
                break;
            }
        }
    }

    let mut parsed_paths: Vec<(TmPath, PathOutcome)> = Vec::new();
    let trigger_chain = raw_paths.len() > 1;
    for (path_offset, raw) in &raw_paths {
        let raw_trimmed = raw.trim();
        if raw_trimmed.is_empty() {
            return Err(ParseError::new(
                ParseErrorKind::EmptyStatementSide,
                SourceSpan {
                    statement,
                    start: base + path_offset,
                    end: base + path_offset + raw.len(),
                },
            ));
        }
        let local = base + path_offset + (raw.len() - raw.trim_start().len());
        let segments = split_segments(raw_trimmed, statement, local)?;
        let (path, outcome) = build_path(segments, model)?;
        parsed_paths.push((path, outcome));
    }

    if trigger_chain {
        for pair in parsed_paths.windows(2) {
            let (left, right) = (&pair[0], &pair[1]);
            let from = left.1.final_stage.ok_or_else(|| {
                ParseError::new(ParseErrorKind::TriggerNeedsStage, left.1.end_span)
            })?;
            let to = right.1.final_stage.ok_or_else(|| {
                ParseError::new(ParseErrorKind::TriggerNeedsStage, right.1.end_span)
            })?;
            model.add_trigger(from, to).map_err(|e| {
                ParseError::new(ParseErrorKind::Model(e), right.1.end_span)
            })?;
        }
        Ok(TmStatement::Trigger(
            parsed_paths.into_iter().map(|(p, _)| p).collect(),
        ))
    } else {
        let (path, _) = parsed_paths.pop().expect("one path");
        Ok(TmStatement::Flow(path))
    }
}

fn split_segments(
    raw: &str,
    statement: usize,
    base: usize,
) -> Result<Vec<TmSegment>, ParseError> {
    let mut segments = Vec::new();
    let mut start = 0usize;
    for piece in raw.split('.') {
        let span = SourceSpan {
            statement,
            start: base + start,
            end: base + start + piece.len(),
        };
        start += piece.len() + 1;
        let word = piece.trim();
        if word.is_empty() {
            return Err(ParseError::new(ParseErrorKind::DanglingDot, span));
        }
        if !word
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(ParseError::new(
                ParseErrorKind::UnknownToken(word.to_string()),
                span,
            ));
        }
        segments.push(TmSegment {
            text: word.to_string(),
            span,
        });
    }
    Ok(segments)
}

struct PathOutcome {
    final_stage: Option<StageId>,
    end_span: SourceSpan,
}

#[derive(Clone, Copy, PartialEq)]
enum Token {
    Header,
    Name,
    Stage(StageKind),
    Marker(Direction),
}

fn classify(text: &str, first: bool) -> Token {
    if text.eq_ignore_ascii_case("flow") && first {
        return Token::Header;
    }
    if let Some(kind) = StageKind::from_keyword(text) {
        return Token::Stage(kind);
    }
    match text.to_ascii_lowercase().as_str() {
        "input" => Token::Marker(Direction::Input),
        "output" => Token::Marker(Direction::Output),
        _ => Token::Name,
    }
}

fn build_path(
    segments: Vec<TmSegment>,
    model: &mut StaticModel,
) -> Result<(TmPath, PathOutcome), ParseError> {
    let mut has_header = false;
    let mut idx = 0usize;

    if classify(&segments[0].text, true) == Token::Header {
        has_header = true;
        idx = 1;
        if segments.len() == 1 {
            return Err(ParseError::new(
                ParseErrorKind::EmptyPath,
                segments[0].span,
            ));
        }
    }

    let mut builder = Builder {
        model,
        ctx: None,
        tail: None,
        tail_is_local: false,
    };

    // First non-header token decides the opening form.
    match classify(&segments[idx].text, false) {
        Token::Name => {}
        Token::Stage(_) if has_header => {
            let ctx = builder.anonymous_context(segments[idx].span)?;
            builder.ctx = Some(ctx);
        }
        Token::Stage(_) => {
            return Err(ParseError::new(
                ParseErrorKind::StatementMustBeginWithName,
                segments[idx].span,
            ));
        }
        Token::Marker(_) => {
            return Err(ParseError::new(
                ParseErrorKind::MarkerWithoutTransfer,
                segments[idx].span,
            ));
        }
        Token::Header => {
            return Err(ParseError::new(
                ParseErrorKind::ReservedWord(segments[idx].text.clone()),
                segments[idx].span,
            ));
        }
    }

    while idx < segments.len() {
        let seg = &segments[idx];
        match classify(&seg.text, false) {
            Token::Header => {
                return Err(ParseError::new(
                    ParseErrorKind::ReservedWord(seg.text.clone()),
                    seg.span,
                ));
            }
            Token::Marker(_) => {
                return Err(ParseError::new(
                    ParseErrorKind::MarkerWithoutTransfer,
                    seg.span,
                ));
            }
            Token::Name => {
                idx = builder.enter_names(&segments, idx)?;
            }
            Token::Stage(StageKind::Receive)
                if matches!(
                    segments.get(idx + 1).map(|s| classify(&s.text, false)),
                    Some(Token::Stage(StageKind::Arrive)) | Some(Token::Stage(StageKind::Accept))
                ) =>
            {
                // Grouping label for the refined receive; no stage.
                idx += 1;
            }
            Token::Stage(kind) => {
                idx = builder.enter_stage(&segments, idx, kind)?;
            }
        }
    }

    let end_span = segments.last().expect("non-empty path").span;
    let outcome = PathOutcome {
        final_stage: builder.tail,
        end_span,
    };
    Ok((
        TmPath {
            has_header,
            segments,
        },
        outcome,
    ))
}

struct Builder<'m> {
    model: &'m mut StaticModel,
    /// Current machine context.
    ctx: Option<ThimacId>,
    /// Previous stage in the flow chain.
    tail: Option<StageId>,
    /// Whether `tail` belongs to `ctx` (an intra-machine predecessor).
    tail_is_local: bool,
}

impl<'m> Builder<'m> {
    fn anonymous_context(&mut self, span: SourceSpan) -> Result<ThimacId, ParseError> {
        if let Some(id) = self.model.find_anonymous(None) {
            return Ok(id);
        }
        self.model
            .add_anonymous_thimac(None)
            .map_err(|e| ParseError::new(ParseErrorKind::Model(e), span))
    }

    fn find_or_add_thimac(
        &mut self,
        parent: Option<ThimacId>,
        seg: &TmSegment,
    ) -> Result<ThimacId, ParseError> {
        if let Some(id) = self.model.find_child(parent, &seg.text) {
            return Ok(id);
        }
        self.model
            .add_thimac(seg.text.clone(), parent)
            .map_err(|e| ParseError::new(ParseErrorKind::Model(e), seg.span))
    }

    /// Consumes a run of Names starting at `idx`. At the head of a path this
    /// is a containment descent from the root; after a transfer stage it is
    /// an inter-machine flow into the named thimac.
    fn enter_names(&mut self, segments: &[TmSegment], idx: usize) -> Result<usize, ParseError> {
        let after_transfer = self.tail.is_some_and(|t| {
            self.model.stage(t).map(|s| s.kind) == Some(StageKind::Transfer)
        });
        if self.tail.is_some() && !after_transfer {
            return Err(ParseError::new(
                ParseErrorKind::NameAfterNonTransfer(segments[idx].text.clone()),
                segments[idx].span,
            ));
        }
        if self.ctx.is_some() && self.tail.is_none() {
            // A machine context is open but no stage was chained; a fresh
            // name here would be ambiguous.
            return Err(ParseError::new(
                ParseErrorKind::NameAfterNonTransfer(segments[idx].text.clone()),
                segments[idx].span,
            ));
        }

        // Containment descent: name chains always resolve from the root.
        let mut i = idx;
        let mut thimac = self.find_or_add_thimac(None, &segments[i])?;
        i += 1;
        while i < segments.len() {
            match classify(&segments[i].text, false) {
                Token::Name => {
                    thimac = self.find_or_add_thimac(Some(thimac), &segments[i])?;
                    i += 1;
                }
                _ => break,
            }
        }

        if after_transfer {
            // Inter-machine flow into the target's entry transfer.
            let source = self.tail.expect("checked above");
            let entry = if matches!(
                segments.get(i).map(|s| classify(&s.text, false)),
                Some(Token::Stage(StageKind::Transfer))
            ) {
                // Explicit transfer follows; resolve it with its marker.
                let (stage, next) =
                    self.resolve_transfer(segments, i, thimac, TransferContext::EnteredFromOutside)?;
                i = next;
                stage
            } else {
                // Implicit input-side transfer.
                self.find_or_add_stage(
                    thimac,
                    StageKind::Transfer,
                    Some(Direction::Input),
                    segments[i - 1].span,
                )?
            };
            self.model
                .add_flow(source, entry)
                .map_err(|e| ParseError::new(ParseErrorKind::Model(e), segments[i - 1].span))?;
            self.ctx = Some(thimac);
            self.tail = Some(entry);
            self.tail_is_local = true;
        } else {
            self.ctx = Some(thimac);
            self.tail = None;
            self.tail_is_local = false;
        }
        Ok(i)
    }

    /// Adds or finds the stage for a keyword at `idx` and chains flow from
    /// the tail. Returns the index after any consumed marker.
    fn enter_stage(
        &mut self,
        segments: &[TmSegment],
        idx: usize,
        kind: StageKind,
    ) -> Result<usize, ParseError> {
        let seg = &segments[idx];
        let ctx = match self.ctx {
            Some(c) => c,
            None => {
                return Err(ParseError::new(
                    ParseErrorKind::StatementMustBeginWithName,
                    seg.span,
                ));
            }
        };
        let (stage, next) = if kind == StageKind::Transfer {
            let context = if self.tail.is_some() && self.tail_is_local {
                TransferContext::FromInside
            } else {
                TransferContext::PathInitial
            };
            self.resolve_transfer(segments, idx, ctx, context)?
        } else {
            (
                self.find_or_add_stage(ctx, kind, None, seg.span)?,
                idx + 1,
            )
        };
        if let Some(tail) = self.tail {
            self.model
                .add_flow(tail, stage)
                .map_err(|e| ParseError::new(ParseErrorKind::Model(e), seg.span))?;
        }
        self.tail = Some(stage);
        self.tail_is_local = true;
        Ok(next)
    }

    /// Resolves a transfer segment's direction: an explicit marker wins,
    /// otherwise the side is inferred from how the flow meets it.
    fn resolve_transfer(
        &mut self,
        segments: &[TmSegment],
        idx: usize,
        owner: ThimacId,
        context: TransferContext,
    ) -> Result<(StageId, usize), ParseError> {
        let seg = &segments[idx];
        let mut next = idx + 1;
        let explicit = match segments.get(next).map(|s| classify(&s.text, false)) {
            Some(Token::Marker(d)) => {
                next += 1;
                Some(d)
            }
            _ => None,
        };
        let direction = explicit.or_else(|| match context {
            TransferContext::EnteredFromOutside => Some(Direction::Input),
            TransferContext::FromInside => Some(Direction::Output),
            TransferContext::PathInitial => {
                match segments.get(next).map(|s| classify(&s.text, false)) {
                    Some(Token::Stage(StageKind::Receive))
                    | Some(Token::Stage(StageKind::Arrive)) => Some(Direction::Input),
                    Some(Token::Name) => Some(Direction::Output),
                    _ => None,
                }
            }
        });
        let stage = self.find_or_add_stage(owner, StageKind::Transfer, direction, seg.span)?;
        Ok((stage, next))
    }

    fn find_or_add_stage(
        &mut self,
        owner: ThimacId,
        kind: StageKind,
        direction: Option<Direction>,
        span: SourceSpan,
    ) -> Result<StageId, ParseError> {
        if let Some(id) = self.model.find_stage(owner, kind, direction) {
            return Ok(id);
        }
        self.model
            .add_stage(owner, kind, direction)
            .map_err(|e| ParseError::new(ParseErrorKind::Model(e), span))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum TransferContext {
    /// The flow entered this thimac from another machine.
    EnteredFromOutside,
    /// The flow arrived from a stage of the same thimac.
    FromInside,
    /// First stage mentioned for this thimac in the path.
    PathInitial,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArcKind;

    fn stage_kinds(model: &StaticModel) -> Vec<String> {
        model.stages().map(|s| model.stage_path(s.id)).collect()
    }

    #[test]
    fn anonymous_context_chain() {
        let (_, m) = parse("Flow.Create.process.release.transfer.output*").unwrap();
        assert_eq!(m.thimac_count(), 1);
        assert!(m.thimacs().next().unwrap().name.is_none());
        assert_eq!(
            stage_kinds(&m),
            vec![
                "Flow.create",
                "Flow.process",
                "Flow.release",
                "Flow.transfer.output"
            ]
        );
        assert_eq!(m.arc_count(), 3);
        assert!(m.arcs().all(|a| a.kind == ArcKind::Flow));
    }

    #[test]
    fn refined_receive_has_no_combined_stage() {
        let (_, m) = parse("Flow.Transfer.input.receive.arrive.accept.process.release.transfer.output*").unwrap();
        let kinds = stage_kinds(&m);
        assert!(kinds.iter().all(|k| !k.ends_with(".receive")));
        assert!(kinds.contains(&"Flow.arrive".to_string()));
        assert!(kinds.contains(&"Flow.accept".to_string()));
        assert_eq!(m.arc_count(), 5);
    }

    #[test]
    fn rooster_trigger() {
        let (doc, m) = parse("Rooster.sound.create-->Sun.rising.create.").unwrap();
        assert_eq!(doc.statements.len(), 1);
        assert!(matches!(doc.statements[0], TmStatement::Trigger(_)));
        let triggers: Vec<_> = m.arcs().filter(|a| a.kind == ArcKind::Trigger).collect();
        assert_eq!(triggers.len(), 1);
        assert_eq!(m.stage_path(triggers[0].from), "Rooster.sound.create");
        assert_eq!(m.stage_path(triggers[0].to), "Sun.rising.create");
    }

    #[test]
    fn inter_machine_flow_chain() {
        let (_, m) =
            parse("Flow.Marble.create.release.transfer.Phydias.transfer.receive.transfer.workshop.")
                .unwrap();
        // Marble flows out, through Phydias, into the workshop.
        let marble_out = m.resolve_stage_path("Marble.transfer.output").unwrap();
        let phydias_in = m.resolve_stage_path("Phydias.transfer.input").unwrap();
        let phydias_out = m.resolve_stage_path("Phydias.transfer.output").unwrap();
        let workshop_in = m.resolve_stage_path("workshop.transfer.input").unwrap();
        let flows: Vec<(StageId, StageId)> = m
            .arcs()
            .filter(|a| a.kind == ArcKind::Flow)
            .map(|a| (a.from, a.to))
            .collect();
        assert!(flows.contains(&(marble_out, phydias_in)));
        assert!(flows.contains(&(phydias_out, workshop_in)));
    }

    #[test]
    fn statements_unify_across_the_document() {
        let text = "Flow.Marble.create.release.transfer.Phydias.transfer.receive.transfer.workshop.\n\
                    Flow.Apollo.image.create.release.transfer.Phydias.transfer.receive.release.transfer.Workshop.";
        let (_, m) = parse(text).unwrap();
        // One Phydias, one workshop (case-insensitive), shared input transfer.
        assert_eq!(
            m.thimacs()
                .filter(|t| t.name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case("phydias")))
                .count(),
            1
        );
        assert_eq!(
            m.thimacs()
                .filter(|t| t.name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case("workshop")))
                .count(),
            1
        );
    }

    #[test]
    fn trigger_inside_flow_statement() {
        let (_, m) =
            parse("Flow.Workshop.transfer.receive.process--> Apollo.temple.statue.create.process.")
                .unwrap();
        let triggers: Vec<_> = m.arcs().filter(|a| a.kind == ArcKind::Trigger).collect();
        assert_eq!(triggers.len(), 1);
        assert_eq!(m.stage_path(triggers[0].from), "Workshop.process");
        // The target is the final stage of the right-hand path.
        assert_eq!(
            m.stage_path(triggers[0].to),
            "Apollo.temple.statue.process"
        );
        // The right-hand path still builds its own flow.
        let statue_create = m.resolve_stage_path("Apollo.temple.statue.create").unwrap();
        let statue_process = m.resolve_stage_path("Apollo.temple.statue.process").unwrap();
        assert!(m
            .arcs()
            .any(|a| a.kind == ArcKind::Flow && a.from == statue_create && a.to == statue_process));
    }

    #[test]
    fn workshop_initial_transfer_is_input_side() {
        let (_, m) = parse("Flow.Workshop.transfer.receive.process.").unwrap();
        assert!(m.resolve_stage_path("Workshop.transfer.input").is_some());
    }

    #[test]
    fn bare_containment_path() {
        let (_, m) = parse("Apollo.temple.").unwrap();
        assert_eq!(m.thimac_count(), 2);
        assert_eq!(m.stage_count(), 0);
    }

    #[test]
    fn trigger_source_must_be_a_stage() {
        let err = parse("Rooster-->Sun.rising.create.").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::TriggerNeedsStage);
        assert_eq!(err.span.statement, 0);
    }

    #[test]
    fn empty_trigger_side_rejected() {
        let err = parse("-->Sun.rising.create.").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::EmptyStatementSide);
    }

    #[test]
    fn dangling_dot_rejected() {
        let err = parse("Rooster..create").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DanglingDot);
    }

    #[test]
    fn unknown_token_has_span() {
        let err = parse("Rooster.so@und.create").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownToken(_)));
        assert_eq!(err.span.start, 8);
        assert_eq!(err.span.end, 14);
    }

    #[test]
    fn keyword_cannot_open_a_headerless_statement() {
        let err = parse("create.release").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::StatementMustBeginWithName);
    }

    #[test]
    fn refinement_conflict_is_a_parse_error() {
        let err = parse("A.receive.process.\nA.arrive.release.").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::Model(ModelError::MixedReceiveRefinement)
        );
        assert_eq!(err.span.statement, 1);
    }

    #[test]
    fn empty_input_is_an_empty_model() {
        let (doc, m) = parse("").unwrap();
        assert!(doc.statements.is_empty());
        assert!(m.is_empty());
    }

    #[test]
    fn marker_must_follow_transfer() {
        let err = parse("A.create.input").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MarkerWithoutTransfer);
    }
}
