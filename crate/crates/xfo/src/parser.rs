//! Recursive-descent parser for `.xfo` model files and `.xws` scenario
//! files. Errors are collected per statement: after one, the parser skips to
//! the end of that statement (including any brace block) and carries on.

use xfo_core::dynamics::{
    Arg, Duration, Edit, LetBinding, LinkTemplate, LoopBound, Node, Param, ParamType, Ref,
    RuleAction, StatePredicate, Workflow, WorkflowStep,
};
use xfo_core::EntityId;

use crate::ast::{ModelDocument, ModelStmt, ScenarioDocument, ScenarioStmt, Spanned};
use crate::diag::{Diagnostic, SourceSpan};
use crate::lexer::{lex, Tok, Token};

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: &'a str,
}

/// Parses a model file. The document holds every statement that parsed;
/// diagnostics cover the rest.
pub fn parse_model(text: &str, file: &str) -> (ModelDocument, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let toks = lex(text, &mut diags, file);
    let mut p = Parser { toks, pos: 0, file };
    let mut doc = ModelDocument::default();
    p.statements(&mut diags, |p| {
        let stmt = p.model_stmt()?;
        Ok(stmt)
    })
    .into_iter()
    .for_each(|s| doc.statements.push(s));
    (doc, diags)
}

pub fn parse_scenario(text: &str, file: &str) -> (ScenarioDocument, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let toks = lex(text, &mut diags, file);
    let mut p = Parser { toks, pos: 0, file };
    let mut doc = ScenarioDocument::default();
    p.statements(&mut diags, Parser::scenario_stmt)
        .into_iter()
        .for_each(|s| doc.statements.push(s));
    (doc, diags)
}

/// Multiword names written as strings map spaces to underscores.
fn name_from_string(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join("_")
}

impl<'a> Parser<'a> {
    fn statements<T>(
        &mut self,
        diags: &mut Vec<Diagnostic>,
        mut stmt: impl FnMut(&mut Self) -> PResult<T>,
    ) -> Vec<Spanned<T>> {
        let mut out = Vec::new();
        loop {
            self.skip_newlines();
            if self.peek() == &Tok::Eof {
                break;
            }
            let start = self.pos;
            let result = stmt(self).and_then(|node| {
                self.end_of_statement()?;
                Ok(node)
            });
            match result {
                Ok(node) => out.push(Spanned {
                    node,
                    span: self.span_between(start, self.pos),
                }),
                Err(d) => {
                    diags.push(d);
                    self.recover(start);
                }
            }
        }
        out
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn span_of(&self, t: &Token) -> SourceSpan {
        SourceSpan::new(self.file, t.line, t.column, t.length.max(1))
    }

    fn here(&self) -> SourceSpan {
        self.span_of(&self.toks[self.pos])
    }

    /// Span from the token at `start` to the last token before `end`
    /// (clipped to the first line).
    fn span_between(&self, start: usize, end: usize) -> SourceSpan {
        let first = &self.toks[start];
        let mut length = first.length.max(1);
        for t in &self.toks[start..end] {
            if t.line == first.line && t.tok != Tok::Newline {
                length = t.column + t.length - first.column;
            }
        }
        SourceSpan::new(self.file, first.line, first.column, length.max(1))
    }

    fn error(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error("E_PARSE", msg, self.here())
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        self.error(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        ))
    }

    fn skip_newlines(&mut self) {
        while self.peek() == &Tok::Newline {
            self.next();
        }
    }

    fn end_of_statement(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.next();
                Ok(())
            }
            Tok::Eof | Tok::RBrace => Ok(()),
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn recover(&mut self, start: usize) {
        let mut depth: i64 = 0;
        for t in &self.toks[start..self.pos] {
            match t.tok {
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth -= 1,
                _ => {}
            }
        }
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Newline if depth <= 0 => {
                    self.next();
                    return;
                }
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth -= 1,
                _ => {}
            }
            self.next();
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.at_keyword(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn punct(&mut self, tok: Tok) -> PResult<()> {
        if self.peek() == &tok {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(w) => {
                self.next();
                Ok(w)
            }
            Tok::Str(s) => {
                self.next();
                Ok(name_from_string(&s))
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    fn number(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.next();
                Ok(n)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected("a string")),
        }
    }

    fn optional_doc(&mut self) -> PResult<Option<String>> {
        if self.at_keyword("doc") {
            self.next();
            Ok(Some(self.string()?))
        } else {
            Ok(None)
        }
    }

    /// `( a, b, ... )` with a caller-supplied item parser; `()` is empty.
    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.punct(Tok::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            self.punct(Tok::Comma)?;
        }
    }

    /// `{ item NL item NL ... }`.
    fn block(&mut self, mut item: impl FnMut(&mut Self) -> PResult<()>) -> PResult<()> {
        self.punct(Tok::LBrace)?;
        loop {
            self.skip_newlines();
            if self.eat(&Tok::RBrace) {
                return Ok(());
            }
            if self.peek() == &Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            item(self)?;
            self.end_of_statement()?;
        }
    }

    fn model_stmt(&mut self) -> PResult<ModelStmt> {
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(self.unexpected("a statement"));
        };
        match kw.as_str() {
            "model" => {
                self.next();
                Ok(ModelStmt::Model { name: self.name()? })
            }
            "universal" => {
                self.next();
                let name = self.name()?;
                self.keyword("is_a")?;
                let parent = self.name()?;
                let doc = self.optional_doc()?;
                Ok(ModelStmt::Universal { name, parent, doc })
            }
            "particular" => {
                self.next();
                let name = self.name()?;
                self.keyword("instance_of")?;
                let universal = self.name()?;
                let doc = self.optional_doc()?;
                Ok(ModelStmt::Particular {
                    name,
                    universal,
                    doc,
                })
            }
            "relation" => {
                self.next();
                let name = self.name()?;
                let domain = self.name()?;
                self.punct(Tok::Arrow)?;
                let range = self.name()?;
                Ok(ModelStmt::Relation {
                    name,
                    domain,
                    range,
                })
            }
            "relate" => {
                self.next();
                let from = self.name()?;
                let kind = self.name()?;
                let to = self.name()?;
                Ok(ModelStmt::Relate { from, kind, to })
            }
            "transitional" => self.transitional(),
            "frame" => self.frame(),
            "workflow" | "mechanism" => self.workflow(),
            "rule" => self.rule(),
            other => Err(self.error(format!("unknown statement `{other}`"))),
        }
    }

    fn transitional(&mut self) -> PResult<ModelStmt> {
        self.keyword("transitional")?;
        let name = self.name()?;
        let params = if self.peek() == &Tok::LParen {
            self.list(Parser::name)?
        } else {
            Vec::new()
        };
        self.punct(Tok::Colon)?;
        let universal = self.name()?;
        let mut unlinks = Vec::new();
        let mut links = Vec::new();
        if self.peek() == &Tok::LBrace {
            self.block(|p| {
                if p.at_keyword("unlink") {
                    p.next();
                    unlinks.push(p.template(&params)?);
                } else if p.at_keyword("link") {
                    p.next();
                    links.push(p.template(&params)?);
                } else {
                    return Err(p.unexpected("`unlink` or `link`"));
                }
                Ok(())
            })?;
        }
        Ok(ModelStmt::Transitional {
            name,
            params,
            universal,
            unlinks,
            links,
        })
    }

    fn frame(&mut self) -> PResult<ModelStmt> {
        self.keyword("frame")?;
        let name = self.name()?;
        let slots = self.list(Parser::name)?;
        let mut templates = Vec::new();
        if self.peek() == &Tok::LBrace {
            self.block(|p| {
                p.keyword("link")?;
                templates.push(p.template(&slots)?);
                Ok(())
            })?;
        }
        Ok(ModelStmt::Frame {
            name,
            slots,
            templates,
        })
    }

    fn reference(&mut self, scope: &[String]) -> PResult<Ref> {
        if self.eat(&Tok::Question) {
            let name = self.name()?;
            let ty = if self.eat(&Tok::Colon) {
                Some(EntityId::new(self.name()?))
            } else {
                None
            };
            return Ok(Ref::Any { name, ty });
        }
        let name = self.name()?;
        Ok(if scope.contains(&name) {
            Ref::Var(name)
        } else {
            Ref::Entity(EntityId::new(name))
        })
    }

    fn template(&mut self, scope: &[String]) -> PResult<LinkTemplate> {
        let from = self.reference(scope)?;
        let kind = self.name()?;
        let to = self.reference(scope)?;
        Ok(LinkTemplate { from, kind, to })
    }

    fn predicate(&mut self, scope: &[String]) -> PResult<StatePredicate> {
        if self.at_keyword("exists") {
            self.next();
            Ok(StatePredicate::Exists(self.template(scope)?))
        } else if self.at_keyword("not") {
            self.next();
            Ok(StatePredicate::NotExists(self.template(scope)?))
        } else {
            Err(self.unexpected("`exists` or `not`"))
        }
    }

    fn predicates(&mut self, scope: &[String]) -> PResult<Vec<StatePredicate>> {
        let mut out = vec![self.predicate(scope)?];
        while self.at_keyword("and") {
            self.next();
            out.push(self.predicate(scope)?);
        }
        Ok(out)
    }

    fn workflow(&mut self) -> PResult<ModelStmt> {
        let requires_agent = self.at_keyword("workflow");
        self.next();
        let name = self.name()?;
        let params = self.list(|p| {
            let name = p.name()?;
            let ty = if p.eat(&Tok::Colon) {
                let ty = p.name()?;
                if ty == "ticks" {
                    ParamType::Ticks
                } else {
                    ParamType::Entity(Some(EntityId::new(ty)))
                }
            } else {
                ParamType::Entity(None)
            };
            Ok(Param { name, ty })
        })?;
        let mut wf = Workflow::new(&name, Node::Seq(Vec::new()), requires_agent);
        wf.params = params;
        let mut scope: Vec<String> = wf.params.iter().map(|p| p.name.clone()).collect();
        let mut nodes = Vec::new();
        self.block(|p| {
            if p.at_keyword("doc") {
                p.next();
                wf.doc = Some(p.string()?);
            } else if p.at_keyword("let") {
                p.next();
                let name = p.name()?;
                p.punct(Tok::Colon)?;
                let ty = EntityId::new(p.name()?);
                p.keyword("where")?;
                scope.push(name.clone());
                let pattern = p.template(&scope)?;
                wf.lets.push(LetBinding { name, ty, pattern });
            } else if p.at_keyword("goal") {
                p.next();
                wf.goal.extend(p.predicates(&scope)?);
            } else {
                nodes.push(p.node(&scope)?);
            }
            Ok(())
        })?;
        wf.body = Node::Seq(nodes);
        Ok(ModelStmt::Workflow(wf))
    }

    fn nodes(&mut self, scope: &[String]) -> PResult<Vec<Node>> {
        let mut nodes = Vec::new();
        self.block(|p| {
            nodes.push(p.node(scope)?);
            Ok(())
        })?;
        Ok(nodes)
    }

    fn node(&mut self, scope: &[String]) -> PResult<Node> {
        if self.at_keyword("step") {
            return self.step(scope).map(Node::Step);
        }
        if self.at_keyword("loop") {
            self.next();
            let bound = if let Tok::Number(n) = self.peek() {
                let n = *n;
                self.next();
                LoopBound::Count(n)
            } else {
                self.keyword("until")?;
                if self.at_keyword("horizon") && self.peek_nth(1) == &Tok::LBrace {
                    self.next();
                    LoopBound::Horizon
                } else {
                    LoopBound::Until(self.predicates(scope)?)
                }
            };
            let body = self.nodes(scope)?;
            return Ok(Node::Loop {
                body: Box::new(Node::Seq(body)),
                bound: Some(bound),
            });
        }
        if self.at_keyword("if") {
            self.next();
            let guard = self.predicates(scope)?;
            let then = self.nodes(scope)?;
            let save = self.pos;
            self.skip_newlines();
            let otherwise = if self.at_keyword("else") {
                self.next();
                self.nodes(scope)?
            } else {
                self.pos = save;
                Vec::new()
            };
            return Ok(Node::Cond {
                guard,
                then: Box::new(Node::Seq(then)),
                otherwise: Box::new(Node::Seq(otherwise)),
            });
        }
        Err(self.unexpected("`step`, `loop` or `if`"))
    }

    fn binding(&mut self, scope: &[String]) -> PResult<Vec<(String, Ref)>> {
        self.list(|p| {
            let slot = p.name()?;
            p.punct(Tok::Equals)?;
            let r = p.reference(scope)?;
            Ok((slot, r))
        })
    }

    fn step(&mut self, scope: &[String]) -> PResult<WorkflowStep> {
        self.keyword("step")?;
        let name = self.name()?;
        self.keyword("duration")?;
        let duration = match self.peek().clone() {
            Tok::Number(n) => {
                self.next();
                Duration::Ticks(n)
            }
            _ => Duration::Var(self.name()?),
        };
        let mut step = WorkflowStep::new(&name, duration);
        if self.at_keyword("placeholder") {
            self.next();
            step.placeholder = true;
        }
        if self.peek() != &Tok::LBrace {
            return Ok(step);
        }
        self.block(|p| {
            let Tok::Ident(kw) = p.peek().clone() else {
                return Err(p.unexpected("a step item"));
            };
            p.next();
            match kw.as_str() {
                "agent" => step.agent = Some(p.reference(scope)?),
                "doc" => step.doc = Some(p.string()?),
                "pre" => step.preconditions.extend(p.predicates(scope)?),
                "unlink" => step.postconditions.push(Edit::Unlink(p.template(scope)?)),
                "link" => step.postconditions.push(Edit::Link(p.template(scope)?)),
                "apply" => {
                    let transitional = p.name()?;
                    let args = p.list(|p| p.reference(scope))?;
                    step.postconditions.push(Edit::Apply { transitional, args });
                }
                "activate" | "deactivate" => {
                    let frame = p.name()?;
                    let binding = p.binding(scope)?;
                    step.postconditions.push(if kw == "activate" {
                        Edit::Activate { frame, binding }
                    } else {
                        Edit::Deactivate { frame, binding }
                    });
                }
                other => return Err(p.error(format!("unknown step item `{other}`"))),
            }
            Ok(())
        })?;
        Ok(step)
    }

    fn arg(&mut self) -> PResult<Arg> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.next();
                Ok(Arg::Ticks(n))
            }
            _ => Ok(Arg::Entity(EntityId::new(self.name()?))),
        }
    }

    fn entity_binding(&mut self) -> PResult<Vec<(String, EntityId)>> {
        self.list(|p| {
            let slot = p.name()?;
            p.punct(Tok::Equals)?;
            Ok((slot, EntityId::new(p.name()?)))
        })
    }

    fn rule(&mut self) -> PResult<ModelStmt> {
        self.keyword("rule")?;
        let name = self.name()?;
        self.keyword("when")?;
        let guard = self.predicates(&[])?;
        self.keyword("then")?;
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(self.unexpected("a rule action"));
        };
        self.next();
        let action = match kw.as_str() {
            "activate" => RuleAction::ActivateFrame {
                frame: self.name()?,
                binding: self.entity_binding()?,
            },
            "deactivate" => RuleAction::DeactivateFrame {
                frame: self.name()?,
                binding: self.entity_binding()?,
            },
            "start" => RuleAction::StartWorkflow {
                workflow: self.name()?,
                args: self.list(Parser::arg)?,
            },
            "apply" => RuleAction::ApplyTransitional {
                transitional: self.name()?,
                args: self.list(|p| p.name().map(EntityId::new))?,
            },
            other => return Err(self.error(format!("unknown rule action `{other}`"))),
        };
        Ok(ModelStmt::Rule {
            name,
            guard,
            action,
        })
    }

    fn at_tick(&mut self) -> PResult<u64> {
        self.keyword("at")?;
        self.number()
    }

    fn label(&mut self) -> PResult<Option<String>> {
        if self.at_keyword("as") {
            self.next();
            Ok(Some(self.name()?))
        } else {
            Ok(None)
        }
    }

    fn scenario_stmt(&mut self) -> PResult<ScenarioStmt> {
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(self.unexpected("a statement"));
        };
        self.next();
        match kw.as_str() {
            "scenario" => {
                let name = self.name()?;
                self.keyword("for")?;
                let model = self.name()?;
                Ok(ScenarioStmt::Header { name, model })
            }
            "horizon" => Ok(ScenarioStmt::Horizon(self.number()?)),
            "init" => {
                let from = self.name()?;
                let kind = self.name()?;
                let to = self.name()?;
                Ok(ScenarioStmt::Init { from, kind, to })
            }
            "run" => {
                let workflow = self.name()?;
                let args = self.list(Parser::arg)?;
                let at = self.at_tick()?;
                let label = self.label()?;
                Ok(ScenarioStmt::Run {
                    workflow,
                    args,
                    at,
                    label,
                })
            }
            "activate" => {
                let frame = self.name()?;
                let binding = self.entity_binding()?;
                let at = self.at_tick()?;
                let label = self.label()?;
                Ok(ScenarioStmt::Activate {
                    frame,
                    binding,
                    at,
                    label,
                })
            }
            "deactivate" => {
                let label = self.name()?;
                let at = self.at_tick()?;
                Ok(ScenarioStmt::Deactivate { label, at })
            }
            "apply" => {
                let transitional = self.name()?;
                let args = self.list(|p| p.name().map(EntityId::new))?;
                let at = self.at_tick()?;
                Ok(ScenarioStmt::Apply {
                    transitional,
                    args,
                    at,
                })
            }
            "interrupt" => {
                let label = self.name()?;
                let at = self.at_tick()?;
                Ok(ScenarioStmt::Interrupt { label, at })
            }
            "rule" => Ok(ScenarioStmt::Rule(self.name()?)),
            other => {
                self.pos -= 1;
                Err(self.error(format!("unknown statement `{other}`")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(text: &str) -> ModelDocument {
        let (doc, diags) = parse_model(text, "m.xfo");
        assert!(diags.is_empty(), "{diags:?}");
        doc
    }

    #[test]
    fn entity_statements() {
        let doc = model("model pots\nuniversal Pottery is_a B_Object doc \"fired clay\"\nparticular \"pot one\" instance_of Pottery\n");
        assert_eq!(doc.name(), Some("pots"));
        assert_eq!(
            doc.statements[1].node,
            ModelStmt::Universal {
                name: "Pottery".into(),
                parent: "B_Object".into(),
                doc: Some("fired clay".into())
            }
        );
        match &doc.statements[2].node {
            ModelStmt::Particular { name, .. } => assert_eq!(name, "pot_one"),
            other => panic!("{other:?}"),
        }
        assert_eq!(doc.statements[1].span.line, 2);
    }

    #[test]
    fn workflow_scopes_params_and_lets() {
        let doc = model(
            "mechanism cycle(light: Light, d: ticks) {\n  let g: Lamp where g Continuant_Part_Of light\n  loop until horizon {\n    step on duration d {\n      pre exists g Has_Quality dark\n      unlink g Has_Quality dark\n      link g Has_Quality green\n    }\n  }\n}\n",
        );
        let ModelStmt::Workflow(wf) = &doc.statements[0].node else {
            panic!()
        };
        assert!(!wf.requires_agent);
        assert_eq!(wf.params[1].ty, ParamType::Ticks);
        assert_eq!(wf.lets[0].pattern.to, Ref::Var("light".into()));
        let steps = wf.steps();
        assert_eq!(steps[0].duration, Duration::Var("d".into()));
        assert_eq!(
            steps[0].postconditions[1],
            Edit::Link(LinkTemplate::new(
                Ref::var("g"),
                "Has_Quality",
                Ref::entity("green")
            ))
        );
    }

    #[test]
    fn conditionals_and_rules() {
        let doc = model(
            "workflow w() {\n  if exists a K b and not ?x:T K b {\n    step s duration 1 placeholder {\n      agent bob\n    }\n  } else {\n    step t duration 0\n  }\n}\nrule vacancy when not ?p:Person Has_Role teacher then start w()\n",
        );
        let ModelStmt::Workflow(wf) = &doc.statements[0].node else {
            panic!()
        };
        let Node::Seq(items) = &wf.body else { panic!() };
        let Node::Cond {
            guard, otherwise, ..
        } = &items[0]
        else {
            panic!()
        };
        assert_eq!(guard.len(), 2);
        assert!(matches!(&**otherwise, Node::Seq(v) if v.len() == 1));
        assert!(wf.steps()[0].placeholder);
        assert!(matches!(
            &doc.statements[1].node,
            ModelStmt::Rule {
                action: RuleAction::StartWorkflow { .. },
                ..
            }
        ));
    }

    #[test]
    fn errors_are_collected_per_statement() {
        let (doc, diags) = parse_model(
            "universal A is_a\nbogus stuff\nuniversal B is_a B_Object\nframe F(a) {\n  link a\n}\nuniversal C is_a B\n",
            "m.xfo",
        );
        assert_eq!(diags.len(), 3, "{diags:?}");
        assert_eq!(diags[0].span.line, 1);
        assert_eq!(diags[1].span.line, 2);
        assert_eq!(diags[2].span.line, 5);
        assert_eq!(doc.statements.len(), 2);
        assert!(diags.iter().all(|d| d.span.line >= 1 && d.span.column >= 1));
    }

    #[test]
    fn scenario_statements() {
        let (doc, diags) = parse_scenario(
            "scenario desk for traffic\nhorizon 12\ninit a Has_Quality dark\nrun cycle(lightA, 2, 1) at 0 as a\nactivate Employment(role = t, person = p) at 0 as job\ndeactivate job at 4\ninterrupt a at 5\nrule vacancy\n",
            "s.xws",
        );
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(doc.header(), Some(("desk", "traffic")));
        assert_eq!(doc.statements.len(), 8);
        assert_eq!(
            doc.statements[3].node,
            ScenarioStmt::Run {
                workflow: "cycle".into(),
                args: vec![Arg::Entity("lightA".into()), Arg::Ticks(2), Arg::Ticks(1)],
                at: 0,
                label: Some("a".into())
            }
        );
    }
}
