//! Recursive-descent parser. Indexed labels, ranges and `forall` are
//! expanded here, so the resulting document is index-free.

use skyweave_fltl::{BoolExpr, Gr1Liveness, SafetyFormula};
use skyweave_lts::Label;

use crate::ast::*;
use crate::lexer::{lex, Tok};
use crate::{DiagKind, Diagnostic};

type PResult<T> = Result<T, Diagnostic>;

const MAX_DEPTH: usize = 200;

pub fn parse(src: &str) -> Result<SpecDocument, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, env: Vec::new(), depth: 0 };
    let mut items = Vec::new();
    while !p.at(&Tok::Eof) {
        items.push(p.item()?);
    }
    let mut doc = SpecDocument { items };
    let fluents: Vec<String> = doc.fluent_names().map(str::to_string).collect();
    let is_fluent = |n: &str| fluents.iter().any(|f| f == n);
    for it in &mut doc.items {
        match it {
            Item::Safety { formula, .. } => *formula = classify_safety(formula, &is_fluent),
            Item::Liveness { formula, .. } => *formula = classify_liveness(formula, &is_fluent),
            _ => {}
        }
    }
    Ok(doc)
}

/// Formula syntax tree before it is sorted into the safety fragment.
#[derive(Clone, Debug)]
enum Pre {
    B(BoolExpr),
    Not(Box<Pre>),
    And(Vec<Pre>),
    Or(Vec<Pre>),
    Imp(Box<Pre>, Box<Pre>),
    Always(Box<Pre>),
    W(Box<Pre>, Box<Pre>),
}

impl Pre {
    fn to_bool(&self) -> Option<BoolExpr> {
        Some(match self {
            Pre::B(b) => b.clone(),
            Pre::Not(x) => BoolExpr::not(x.to_bool()?),
            Pre::And(v) => BoolExpr::And(v.iter().map(Pre::to_bool).collect::<Option<_>>()?),
            Pre::Or(v) => BoolExpr::Or(v.iter().map(Pre::to_bool).collect::<Option<_>>()?),
            Pre::Imp(a, b) => BoolExpr::implies(a.to_bool()?, b.to_bool()?),
            Pre::Always(_) | Pre::W(..) => return None,
        })
    }

    fn to_safety(&self) -> Result<SafetyFormula, &'static str> {
        match self {
            Pre::Always(x) => {
                if let Some(b) = x.to_bool() {
                    return Ok(SafetyFormula::Always(b));
                }
                if let Pre::Imp(t, w) = &**x {
                    if let Pre::W(h, r) = &**w {
                        if let (Some(t), Some(h), Some(r)) = (t.to_bool(), h.to_bool(), r.to_bool()) {
                            return Ok(SafetyFormula::AlwaysImplWeakUntil { trigger: t, hold: h, release: r });
                        }
                    }
                }
                Err("inside [](..) only a boolean expression or `t -> (h W r)` is supported")
            }
            Pre::W(h, r) => match (h.to_bool(), r.to_bool()) {
                (Some(h), Some(r)) => Ok(SafetyFormula::WeakUntil(h, r)),
                _ => Err("both sides of W must be boolean expressions"),
            },
            Pre::And(v) => Ok(SafetyFormula::Conj(v.iter().map(Pre::to_safety).collect::<Result<_, _>>()?)),
            _ => Err("a safety clause must be [](..), (..) W (..) or a conjunction of those"),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    env: Vec<(String, i64)>,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos.min(self.toks.len() - 1)].1
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(DiagKind::Syntax, msg, self.span()))
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if self.at(&t) {
            Ok(self.bump().1)
        } else {
            self.err(format!("expected {}, found {}", t.describe(), self.peek().describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.at_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().1;
                Ok(Name { text: s, span })
            }
            other => self.err(format!("expected a name, found {}", other.describe())),
        }
    }

    fn int(&mut self) -> PResult<u32> {
        match *self.peek() {
            Tok::Int(v) if v >= 0 && v <= u32::MAX as i64 => {
                self.bump();
                Ok(v as u32)
            }
            _ => self.err(format!("expected a non-negative integer, found {}", self.peek().describe())),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn item(&mut self) -> PResult<Item> {
        if self.at(&Tok::BarBar) {
            return self.composition();
        }
        let Tok::Ident(head) = self.peek().clone() else {
            return self.err(format!("expected a declaration, found {}", self.peek().describe()));
        };
        let next_is_ident = matches!(self.peek_at(1), Tok::Ident(_));
        match head.as_str() {
            "set" if next_is_ident => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                let value = self.set_expr()?;
                self.expect(Tok::Dot)?;
                Ok(Item::Set { name, value })
            }
            "controllable" | "uncontrollable" if *self.peek_at(1) == Tok::Eq => {
                let span = self.bump().1;
                self.bump();
                let set = self.set_expr()?;
                self.expect(Tok::Dot)?;
                Ok(if head == "controllable" { Item::Controllable { set, span } } else { Item::Uncontrollable { set, span } })
            }
            "fluent" if next_is_ident => self.fluent(),
            "assert" if next_is_ident => {
                self.bump();
                self.expect_kw("safety")?;
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                let at = self.span();
                let pre = self.pre()?;
                let formula = pre.to_safety().map_err(|m| Diagnostic::new(DiagKind::Fragment, m, at))?;
                self.expect(Tok::Dot)?;
                Ok(Item::Safety { name, formula })
            }
            "liveness" if next_is_ident => self.liveness(),
            "problem" if next_is_ident => self.problem(),
            _ if *self.peek_at(1) == Tok::Eq => self.process(),
            _ => self.err(format!("expected a declaration, found {}", self.peek().describe())),
        }
    }

    fn composition(&mut self) -> PResult<Item> {
        self.expect(Tok::BarBar)?;
        let name = self.ident()?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::LParen)?;
        let mut parts = vec![self.ident()?];
        while self.eat(&Tok::BarBar) {
            parts.push(self.ident()?);
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        Ok(Item::Composition { name, parts })
    }

    fn fluent(&mut self) -> PResult<Item> {
        self.expect_kw("fluent")?;
        let name = self.ident()?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::Lt)?;
        let initiating = self.set_expr()?;
        self.expect(Tok::Comma)?;
        let terminating = self.set_expr()?;
        let mut initial = false;
        if self.eat(&Tok::Comma) {
            self.expect_kw("init")?;
            initial = self.boolean()?;
        }
        self.expect(Tok::Gt)?;
        self.expect(Tok::Dot)?;
        Ok(Item::Fluent { name, initiating, terminating, initial })
    }

    fn boolean(&mut self) -> PResult<bool> {
        if self.at_kw("true") {
            self.bump();
            Ok(true)
        } else if self.at_kw("false") {
            self.bump();
            Ok(false)
        } else {
            self.err("expected `true` or `false`")
        }
    }

    fn liveness(&mut self) -> PResult<Item> {
        self.expect_kw("liveness")?;
        let name = self.ident()?;
        self.expect(Tok::Eq)?;
        self.expect_kw("gr1")?;
        self.expect(Tok::LParen)?;
        let mut formula = Gr1Liveness::default();
        if !self.at(&Tok::Turnstile) {
            formula.assumptions = self.recurrence_list()?;
        }
        self.expect(Tok::Turnstile)?;
        if !self.at(&Tok::RParen) {
            formula.guarantees = self.recurrence_list()?;
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        Ok(Item::Liveness { name, formula })
    }

    fn recurrence_list(&mut self) -> PResult<Vec<BoolExpr>> {
        let mut out = Vec::new();
        loop {
            self.expect(Tok::Box)?;
            self.expect(Tok::Diamond)?;
            let at = self.span();
            let p = self.unary()?;
            match p.to_bool() {
                Some(b) => out.push(b),
                None => return Err(Diagnostic::new(DiagKind::Fragment, "[]<>(..) takes a boolean expression", at)),
            }
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn problem(&mut self) -> PResult<Item> {
        self.expect_kw("problem")?;
        if self.at_kw("control") {
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::LBrace)?;
            let (mut env, mut safety, mut liveness) = (None, Vec::new(), None);
            while !self.eat(&Tok::RBrace) {
                let key = self.ident()?;
                self.expect(Tok::Eq)?;
                match key.text.as_str() {
                    "env" => env = Some(self.ident()?),
                    "safety" => safety = self.name_list()?,
                    "liveness" => liveness = Some(self.ident()?),
                    other => {
                        return Err(Diagnostic::new(DiagKind::Syntax, format!("unknown control problem field `{other}`"), key.span))
                    }
                }
                self.expect(Tok::Semi)?;
            }
            let Some(env) = env else {
                return Err(Diagnostic::new(DiagKind::Syntax, "control problem needs `env = ..;`", name.span));
            };
            Ok(Item::ControlProblem { name, env, safety, liveness })
        } else if self.at_kw("update") {
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::LBrace)?;
            let (mut old, mut new, mut maps, mut theta) = (None, None, Vec::new(), Vec::new());
            while !self.eat(&Tok::RBrace) {
                let key = self.ident()?;
                match key.text.as_str() {
                    "old" | "new" => {
                        self.expect(Tok::Eq)?;
                        let v = Some(self.ident()?);
                        if key.text == "old" {
                            old = v
                        } else {
                            new = v
                        }
                    }
                    "theta" => {
                        self.expect(Tok::Eq)?;
                        theta = self.name_list()?;
                    }
                    "map" => {
                        let from = self.ident()?;
                        self.expect(Tok::Arrow)?;
                        let to = self.ident()?;
                        let pairs = self.state_map()?;
                        let mut except = Vec::new();
                        if self.at_kw("except") {
                            self.bump();
                            self.expect(Tok::LBrace)?;
                            if !self.eat(&Tok::RBrace) {
                                loop {
                                    except.push(self.state_ref()?);
                                    if !self.eat(&Tok::Comma) {
                                        break;
                                    }
                                }
                                self.expect(Tok::RBrace)?;
                            }
                        }
                        maps.push(MapBlock { from, to, pairs, except, span: key.span });
                    }
                    other => {
                        return Err(Diagnostic::new(DiagKind::Syntax, format!("unknown update problem field `{other}`"), key.span))
                    }
                }
                self.expect(Tok::Semi)?;
            }
            let (Some(old), Some(new)) = (old, new) else {
                return Err(Diagnostic::new(DiagKind::Syntax, "update problem needs `old = ..;` and `new = ..;`", name.span));
            };
            Ok(Item::UpdateProblem { name, old, new, maps, theta })
        } else {
            self.err("expected `control` or `update`")
        }
    }

    fn name_list(&mut self) -> PResult<Vec<Name>> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn state_ref(&mut self) -> PResult<StateRef> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(StateRef::Name(s))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(StateRef::Name(s))
            }
            Tok::Int(_) => Ok(StateRef::Index(self.int()?)),
            other => self.err(format!("expected a state, found {}", other.describe())),
        }
    }

    fn state_map(&mut self) -> PResult<Vec<(StateRef, StateRef)>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        if !self.eat(&Tok::RBrace) {
            loop {
                let a = self.state_ref()?;
                self.expect(Tok::Arrow)?;
                let b = self.state_ref()?;
                out.push((a, b));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }
        Ok(out)
    }

    fn process(&mut self) -> PResult<Item> {
        let name = self.ident()?;
        self.expect(Tok::Eq)?;
        let body = if self.at_kw("grid") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            let rows = self.int()?;
            self.expect(Tok::Comma)?;
            let cols = self.int()?;
            self.expect(Tok::Comma)?;
            let init = self.int()?;
            let mut blocked = Vec::new();
            if self.eat(&Tok::Comma) {
                blocked = self.int_set()?;
            }
            self.expect(Tok::RParen)?;
            ProcessBody::Grid { rows, cols, init, blocked }
        } else if self.at_kw("moves") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            self.expect(Tok::LBrace)?;
            let mut edges = Vec::new();
            if !self.eat(&Tok::RBrace) {
                loop {
                    let a = self.int()?;
                    self.expect(Tok::Minus)?;
                    let b = self.int()?;
                    edges.push((a, b));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
            }
            self.expect(Tok::Comma)?;
            let init = self.int()?;
            self.expect(Tok::RParen)?;
            ProcessBody::Moves { edges, init }
        } else if self.at_kw("interrupt") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            let first = self.ident()?;
            self.expect(Tok::Comma)?;
            let second = self.ident()?;
            self.expect(Tok::Comma)?;
            let label = self.single_label()?;
            self.expect(Tok::Comma)?;
            let map = self.state_map()?;
            self.expect(Tok::RParen)?;
            ProcessBody::Interrupt { first, second, label, map }
        } else {
            let mut defs = vec![LocalDef { name: name.clone(), branches: self.local_body()? }];
            while self.eat(&Tok::Comma) {
                let n = self.ident()?;
                self.expect(Tok::Eq)?;
                defs.push(LocalDef { name: n, branches: self.local_body()? });
            }
            ProcessBody::Equations(defs)
        };
        let extra = if self.eat(&Tok::Plus) { Some(self.set_expr()?) } else { None };
        self.expect(Tok::Dot)?;
        Ok(Item::Process { name, body, extra })
    }

    fn int_set(&mut self) -> PResult<Vec<u32>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        if !self.eat(&Tok::RBrace) {
            loop {
                out.push(self.int()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }
        Ok(out)
    }

    fn local_body(&mut self) -> PResult<Vec<Branch>> {
        if self.at_kw("STOP") {
            self.bump();
            return Ok(Vec::new());
        }
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        loop {
            out.extend(self.branch()?);
            if !self.eat(&Tok::Bar) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    /// `a -> b -> T`; a leading `{a, b}` expands into one branch per label.
    fn branch(&mut self) -> PResult<Vec<Branch>> {
        let mut firsts = Vec::new();
        if self.at(&Tok::LBrace) {
            firsts = self.label_lit()?;
        } else {
            firsts.push(self.single_label()?);
        }
        let mut rest = Vec::new();
        self.expect(Tok::Arrow)?;
        loop {
            let sp = self.span();
            let Tok::Ident(s) = self.peek().clone() else {
                return self.err(format!("expected an action or state, found {}", self.peek().describe()));
            };
            if *self.peek_at(1) == Tok::Arrow || *self.peek_at(1) == Tok::LBracket {
                rest.push(self.single_label()?);
                self.expect(Tok::Arrow)?;
                continue;
            }
            self.bump();
            let target = if s == "STOP" { Target::Stop } else { Target::Local(Name { text: s, span: sp }) };
            return Ok(firsts
                .into_iter()
                .map(|f| {
                    let mut actions = vec![f];
                    actions.extend(rest.iter().cloned());
                    Branch { actions, target: target.clone() }
                })
                .collect());
        }
    }

    fn set_expr(&mut self) -> PResult<SetExpr> {
        let mut lhs = self.set_term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = SetExpr::Union(Box::new(lhs), Box::new(self.set_term()?));
            } else if self.eat(&Tok::Backslash) {
                lhs = SetExpr::Diff(Box::new(lhs), Box::new(self.set_term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn set_term(&mut self) -> PResult<SetExpr> {
        if self.at(&Tok::LParen) {
            self.enter()?;
            self.bump();
            let e = self.set_expr()?;
            self.expect(Tok::RParen)?;
            self.leave();
            return Ok(e);
        }
        if self.at(&Tok::LBrace) {
            return Ok(SetExpr::Lit(self.label_lit()?));
        }
        let n = self.ident()?;
        if n.text == "Sigma" {
            Ok(SetExpr::Sigma(n.span))
        } else {
            Ok(SetExpr::Ref(n))
        }
    }

    fn label_lit(&mut self) -> PResult<Vec<LabelRef>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.extend(self.labels()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn single_label(&mut self) -> PResult<LabelRef> {
        let at = self.span();
        let mut v = self.labels()?;
        if v.len() != 1 {
            return Err(Diagnostic::new(DiagKind::Syntax, "a range is not allowed here", at));
        }
        Ok(v.remove(0))
    }

    /// A label with optional `[expr]` or `[i:lo..hi]` index segments.
    fn labels(&mut self) -> PResult<Vec<LabelRef>> {
        let base = self.ident()?;
        let mut names = vec![base.text.clone()];
        let mut span = base.span;
        while self.at(&Tok::LBracket) {
            self.bump();
            let values: Vec<i64> = if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon {
                self.bump();
                self.bump();
                let lo = self.iexpr()?;
                self.expect(Tok::DotDot)?;
                let hi = self.iexpr()?;
                if hi - lo > 1_000_000 {
                    return self.err("range too large");
                }
                (lo..=hi).collect()
            } else {
                vec![self.iexpr()?]
            };
            let close = self.expect(Tok::RBracket)?;
            span.end = close.end;
            if values.iter().any(|&v| v < 0) {
                return Err(Diagnostic::new(DiagKind::Syntax, "label index is negative", span));
            }
            names = names.iter().flat_map(|n| values.iter().map(move |v| format!("{n}.{v}"))).collect();
        }
        names
            .into_iter()
            .map(|n| match Label::new(&n) {
                Ok(label) => Ok(LabelRef { label, span }),
                Err(_) => Err(Diagnostic::new(DiagKind::Syntax, format!("invalid label `{n}`"), span)),
            })
            .collect()
    }

    fn iexpr(&mut self) -> PResult<i64> {
        let mut v = self.iterm()?;
        loop {
            if self.eat(&Tok::Plus) {
                v = v.saturating_add(self.iterm()?);
            } else if self.eat(&Tok::Minus) {
                v = v.saturating_sub(self.iterm()?);
            } else {
                return Ok(v);
            }
        }
    }

    fn iterm(&mut self) -> PResult<i64> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            Tok::Ident(s) => match self.env.iter().rev().find(|(n, _)| *n == s) {
                Some(&(_, v)) => {
                    self.bump();
                    Ok(v)
                }
                None => Err(Diagnostic::new(DiagKind::UnresolvedName, format!("unknown index variable `{s}`"), self.span())),
            },
            Tok::LParen => {
                self.enter()?;
                self.bump();
                let v = self.iexpr()?;
                self.expect(Tok::RParen)?;
                self.leave();
                Ok(v)
            }
            other => self.err(format!("expected an index expression, found {}", other.describe())),
        }
    }

    fn condition(&mut self) -> PResult<bool> {
        let mut ok = true;
        loop {
            let a = self.iexpr()?;
            let op = self.bump();
            let b = self.iexpr()?;
            ok &= match op.0 {
                Tok::EqEq => a == b,
                Tok::NotEq => a != b,
                Tok::Lt => a < b,
                Tok::Le => a <= b,
                Tok::Gt => a > b,
                Tok::Ge => a >= b,
                other => return Err(Diagnostic::new(DiagKind::Syntax, format!("expected a comparison, found {}", other.describe()), op.1)),
            };
            if !self.eat(&Tok::AndAnd) {
                return Ok(ok);
            }
        }
    }

    fn pre(&mut self) -> PResult<Pre> {
        self.enter()?;
        let lhs = self.implication()?;
        let out = if self.at_kw("W") {
            self.bump();
            Pre::W(Box::new(lhs), Box::new(self.pre()?))
        } else {
            lhs
        };
        self.leave();
        Ok(out)
    }

    fn implication(&mut self) -> PResult<Pre> {
        self.enter()?;
        let lhs = self.disjunction()?;
        let out = if self.eat(&Tok::Arrow) { Pre::Imp(Box::new(lhs), Box::new(self.implication()?)) } else { lhs };
        self.leave();
        Ok(out)
    }

    fn disjunction(&mut self) -> PResult<Pre> {
        let mut v = vec![self.conjunction()?];
        while self.eat(&Tok::BarBar) {
            v.push(self.conjunction()?);
        }
        Ok(if v.len() == 1 { v.pop().unwrap() } else { Pre::Or(v) })
    }

    fn conjunction(&mut self) -> PResult<Pre> {
        let mut v = vec![self.unary()?];
        while self.eat(&Tok::AndAnd) {
            v.push(self.unary()?);
        }
        Ok(if v.len() == 1 { v.pop().unwrap() } else { Pre::And(v) })
    }

    fn unary(&mut self) -> PResult<Pre> {
        self.enter()?;
        let out = if self.eat(&Tok::Bang) { Pre::Not(Box::new(self.unary()?)) } else { self.primary()? };
        self.leave();
        Ok(out)
    }

    fn primary(&mut self) -> PResult<Pre> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let p = self.pre()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Box => {
                self.bump();
                self.expect(Tok::LParen)?;
                let p = self.pre()?;
                self.expect(Tok::RParen)?;
                Ok(Pre::Always(Box::new(p)))
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Pre::B(BoolExpr::Const(true)))
                }
                "false" => {
                    self.bump();
                    Ok(Pre::B(BoolExpr::Const(false)))
                }
                "and" | "or" if *self.peek_at(1) == Tok::LParen => {
                    self.bump();
                    self.bump();
                    let p = self.pre()?;
                    self.expect(Tok::RParen)?;
                    Ok(if s == "and" { Pre::And(vec![p]) } else { Pre::Or(vec![p]) })
                }
                "forall" => self.forall(),
                _ => {
                    let l = self.single_label()?;
                    Ok(Pre::B(BoolExpr::Fluent(l.label.as_str().to_string())))
                }
            },
            other => self.err(format!("expected a formula, found {}", other.describe())),
        }
    }

    /// `forall i:a..b, j:c..d | cond . body`, expanded to a conjunction.
    fn forall(&mut self) -> PResult<Pre> {
        self.expect_kw("forall")?;
        let mut vars = Vec::new();
        loop {
            let v = self.ident()?;
            self.expect(Tok::Colon)?;
            let lo_at = self.pos;
            // bounds may mention earlier variables, so they are evaluated per tuple
            self.skip_bound()?;
            vars.push((v.text, lo_at));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let cond_at = if self.eat(&Tok::Bar) {
            let at = self.pos;
            self.skip_condition()?;
            Some(at)
        } else {
            None
        };
        self.expect(Tok::Dot)?;
        let body_at = self.pos;
        let base = self.env.len();
        let mut parts = Vec::new();
        let mut end = None;
        let mut budget = 1_000_000usize;
        self.expand(&vars, 0, cond_at, body_at, &mut parts, &mut end, &mut budget)?;
        self.env.truncate(base);
        match end {
            Some(e) => self.pos = e,
            None => {
                for (v, _) in &vars {
                    self.env.push((v.clone(), 0));
                }
                self.pos = body_at;
                self.unary()?;
                self.env.truncate(base);
            }
        }
        Ok(Pre::And(parts))
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        &mut self,
        vars: &[(String, usize)],
        k: usize,
        cond_at: Option<usize>,
        body_at: usize,
        parts: &mut Vec<Pre>,
        end: &mut Option<usize>,
        budget: &mut usize,
    ) -> PResult<()> {
        if k == vars.len() {
            let keep = match cond_at {
                Some(at) => {
                    self.pos = at;
                    self.condition()?
                }
                None => true,
            };
            self.pos = body_at;
            let body = self.unary()?;
            *end = Some(self.pos);
            if keep {
                parts.push(body);
            }
            return Ok(());
        }
        self.pos = vars[k].1;
        let lo = self.iexpr()?;
        self.expect(Tok::DotDot)?;
        let hi = self.iexpr()?;
        for v in lo..=hi {
            if *budget == 0 {
                return self.err("forall expands to too many instances");
            }
            *budget -= 1;
            self.env.push((vars[k].0.clone(), v));
            self.expand(vars, k + 1, cond_at, body_at, parts, end, budget)?;
            self.env.pop();
        }
        Ok(())
    }

    fn skip_bound(&mut self) -> PResult<()> {
        self.skip_until(|t| matches!(t, Tok::Comma | Tok::Bar | Tok::Dot))
    }

    fn skip_condition(&mut self) -> PResult<()> {
        self.skip_until(|t| matches!(t, Tok::Dot))
    }

    fn skip_until(&mut self, stop: impl Fn(&Tok) -> bool) -> PResult<()> {
        let mut depth = 0i32;
        loop {
            match self.peek() {
                Tok::Eof => return self.err("unexpected end of input in forall"),
                Tok::LParen => depth += 1,
                Tok::RParen => depth -= 1,
                t if depth == 0 && stop(t) => return Ok(()),
                _ => {}
            }
            self.bump();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document() {
        assert_eq!(parse("").unwrap(), SpecDocument::default());
        assert_eq!(parse("  // nothing\n").unwrap(), SpecDocument::default());
    }

    #[test]
    fn process_with_choice_and_set_prefix() {
        let doc = parse("P = ({a, b} -> c -> P | d -> Q), Q = STOP.").unwrap();
        let Item::Process { body: ProcessBody::Equations(defs), .. } = &doc.items[0] else { panic!() };
        assert_eq!(defs.len(), 2);
        assert_eq!(defs[0].branches.len(), 3);
        assert_eq!(defs[0].branches[1].actions.len(), 2);
        assert!(defs[1].branches.is_empty());
    }

    #[test]
    fn ranges_expand() {
        let doc = parse("set Go = {go[i:0..2], at[1+1]}.").unwrap();
        let Item::Set { value: SetExpr::Lit(v), .. } = &doc.items[0] else { panic!() };
        let names: Vec<&str> = v.iter().map(|l| l.label.as_str()).collect();
        assert_eq!(names, ["go.0", "go.1", "go.2", "at.2"]);
    }

    #[test]
    fn forall_expands_with_condition() {
        let doc = parse("assert safety S = forall i:0..2, j:0..2 | i != j . [](!(x[i] && x[j])).").unwrap();
        let Item::Safety { formula: SafetyFormula::Conj(v), .. } = &doc.items[0] else { panic!() };
        assert_eq!(v.len(), 6);
        assert_eq!(v[0].to_string(), "[](!(x.0 && x.1))");
    }

    #[test]
    fn weak_until_forms() {
        let doc = parse("fluent T = <{t}, {u}>. assert safety S = [](T -> ((h) W (r))) && ((a) W (b)).").unwrap();
        let Item::Safety { formula: SafetyFormula::Conj(v), .. } = &doc.items[1] else { panic!() };
        assert!(matches!(v[0], SafetyFormula::AlwaysImplWeakUntil { trigger: BoolExpr::Fluent(_), .. }));
        assert!(matches!(v[1], SafetyFormula::WeakUntil(BoolExpr::Event(_), _)));
    }

    #[test]
    fn fragment_errors() {
        let e = parse("assert safety S = [](a W (b W c)).").unwrap_err();
        assert_eq!(e.kind, DiagKind::Fragment);
        let e = parse("assert safety S = a && b.").unwrap_err();
        assert_eq!(e.kind, DiagKind::Fragment);
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse("P = (a -> ).").unwrap_err();
        assert_eq!(e.kind, DiagKind::Syntax);
        assert_eq!((e.span.line, e.span.col), (1, 11));
    }

    #[test]
    fn deep_nesting_is_rejected_not_crashing() {
        let src = format!("assert safety S = []({}a{}).", "(".repeat(5000), ")".repeat(5000));
        assert!(parse(&src).is_err());
    }
}
