use num_bigint::BigUint;

use super::ast::*;
use super::diagnostic::Diagnostic;
use super::lexer::{tokenize, Token, TokenKind};

/// Words that open a declaration; they cannot name anything.
pub const KEYWORDS: [&str; 8] = [
    "factor",
    "agent",
    "basis",
    "prepare",
    "measure",
    "control",
    "statement",
    "option",
];

const DECIMAL_HINT: &str = "amplitudes are exact: write a fraction such as 1/2 or a root such as 1/sqrt(2) or sqrt(1/3)";

/// Error already reported.
struct Reported;

type PResult<T> = Result<T, Reported>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    eof: Span,
    diagnostics: Vec<Diagnostic>,
}

fn end_of(text: &str) -> Pos {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    Pos {
        line,
        col,
        offset: text.len(),
    }
}

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        self.tokens.get(self.pos).map_or(self.eof, |t| t.span)
    }

    fn prev_span(&self) -> Span {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map_or(self.eof, |t| t.span)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned()?;
        match t.kind {
            TokenKind::LBrace => self.depth += 1,
            TokenKind::RBrace => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        self.pos += 1;
        Some(t)
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(k) => k.to_string(),
            None => "end of file".into(),
        }
    }

    fn error(&mut self, span: Span, message: String, hint: Option<&str>) -> Reported {
        self.diagnostics
            .push(Diagnostic::error(span, message, hint.map(str::to_string)));
        Reported
    }

    fn expected(&mut self, what: &str) -> Reported {
        let message = format!("expected {what}, found {}", self.found());
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Decimal(_)) => self.error(span, message, Some(DECIMAL_HINT)),
            _ => self.error(span, message, None),
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Span> {
        if self.peek() == Some(&kind) {
            Ok(self.bump().expect("peeked").span)
        } else {
            Err(self.expected(&kind.to_string()))
        }
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(s)) if s == word)
    }

    fn expect_word(&mut self, word: &str) -> PResult<Span> {
        if self.at_word(word) {
            Ok(self.bump().expect("peeked").span)
        } else {
            Err(self.expected(&format!("`{word}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(s)) if !is_keyword(s) => {
                let t = self.bump().expect("peeked");
                let TokenKind::Ident(name) = t.kind else { unreachable!() };
                Ok(Ident { name, span: t.span })
            }
            Some(TokenKind::Ident(s)) => {
                let message = format!("expected {what}, found reserved word `{s}`");
                let span = self.span();
                Err(self.error(span, message, Some("declaration keywords cannot be used as names")))
            }
            _ => Err(self.expected(what)),
        }
    }

    /// `IDENT (("*" | "⊗") IDENT)*`
    fn product(&mut self, what: &str) -> PResult<Vec<Ident>> {
        let mut out = vec![self.ident(what)?];
        while self.eat(&TokenKind::Times) {
            out.push(self.ident(what)?);
        }
        Ok(out)
    }

    fn integer(&mut self) -> PResult<BigUint> {
        match self.peek() {
            Some(TokenKind::Int(s)) => {
                let n = s.parse::<BigUint>().expect("lexer yields digits");
                self.bump();
                Ok(n)
            }
            _ => Err(self.expected("an integer")),
        }
    }

    /// `INT ["/" INT]`, leaving a `/sqrt` suffix in place.
    fn rational(&mut self) -> PResult<Rational> {
        let num = self.integer()?;
        let den = if self.peek() == Some(&TokenKind::Slash)
            && matches!(self.peek_at(1), Some(TokenKind::Int(_)))
        {
            self.bump();
            Some(self.integer()?)
        } else {
            None
        };
        Ok(Rational { num, den })
    }

    fn at_sqrt_call(&self, offset: usize) -> bool {
        matches!(self.peek_at(offset), Some(TokenKind::Ident(s)) if s == "sqrt")
            && self.peek_at(offset + 1) == Some(&TokenKind::LParen)
    }

    fn coef(&mut self) -> PResult<Option<Coef>> {
        match self.peek() {
            Some(TokenKind::Int(_)) => {
                let q = self.rational()?;
                if self.peek() == Some(&TokenKind::Slash) {
                    self.bump();
                    if !self.at_sqrt_call(0) {
                        return Err(self.expected("an integer or `sqrt(`"));
                    }
                    self.bump();
                    self.bump();
                    let n = self.integer()?;
                    self.expect(TokenKind::RParen)?;
                    Ok(Some(Coef::OverSqrt(q, n)))
                } else {
                    Ok(Some(Coef::Rational(q)))
                }
            }
            _ if self.at_sqrt_call(0) => {
                self.bump();
                self.bump();
                let q = self.rational()?;
                self.expect(TokenKind::RParen)?;
                Ok(Some(Coef::Sqrt(q)))
            }
            Some(TokenKind::Decimal(d)) => {
                let message = format!("decimal literal `{d}` is not an exact amplitude");
                let span = self.span();
                Err(self.error(span, message, Some(DECIMAL_HINT)))
            }
            _ => Ok(None),
        }
    }

    fn term(&mut self, negative: bool, start: Span) -> PResult<Term> {
        let coef = self.coef()?;
        if coef.is_some() {
            self.eat(&TokenKind::Times);
        }
        let product = self.product("a basis label")?;
        Ok(Term {
            negative,
            coef,
            product,
            span: start.to(self.prev_span()),
        })
    }

    /// `["-"] term (("+" | "-") term)*`
    fn amplitude(&mut self) -> PResult<AmpExpr> {
        let start = self.span();
        let negative = self.eat(&TokenKind::Minus);
        let mut terms = vec![self.term(negative, start)?];
        loop {
            let s = self.span();
            let negative = match self.peek() {
                Some(TokenKind::Plus) => false,
                Some(TokenKind::Minus) => true,
                _ => break,
            };
            self.bump();
            terms.push(self.term(negative, s)?);
        }
        Ok(AmpExpr {
            terms,
            span: start.to(self.prev_span()),
        })
    }

    fn predicate(&mut self) -> PResult<PredicateExpr> {
        let mut atoms = Vec::new();
        loop {
            let variable = self.ident("a variable")?;
            self.expect(TokenKind::Equals)?;
            let value = self.ident("a value")?;
            atoms.push(Atom { variable, value });
            if self.at_word("and") {
                self.bump();
            } else {
                break;
            }
        }
        Ok(PredicateExpr { atoms })
    }

    fn decl(&mut self, keyword: &str) -> PResult<Decl> {
        match keyword {
            "factor" => {
                let name = self.ident("a factor name")?;
                self.expect(TokenKind::LBrace)?;
                let mut labels = vec![self.ident("a basis label")?];
                while self.eat(&TokenKind::Comma) {
                    labels.push(self.ident("a basis label")?);
                }
                self.expect(TokenKind::RBrace)?;
                if labels.len() < 2 {
                    let span = name.span;
                    return Err(self.error(
                        span,
                        format!("factor `{name}` needs at least two basis labels"),
                        None,
                    ));
                }
                Ok(Decl::Factor { name, labels })
            }
            "agent" => Ok(Decl::Agent {
                name: self.ident("an agent name")?,
            }),
            "basis" => {
                let name = self.ident("a basis name")?;
                self.expect_word("on")?;
                let targets = self.product("a factor name")?;
                self.expect(TokenKind::LBrace)?;
                let mut outcomes = Vec::new();
                while !matches!(self.peek(), Some(TokenKind::RBrace) | None) {
                    let label = self.ident("an outcome label")?;
                    self.expect(TokenKind::Equals)?;
                    let amplitude = self.amplitude()?;
                    outcomes.push(OutcomeDef { label, amplitude });
                    self.eat(&TokenKind::Comma);
                }
                self.expect(TokenKind::RBrace)?;
                if outcomes.is_empty() {
                    let span = name.span;
                    return Err(self.error(span, format!("basis `{name}` declares no outcomes"), None));
                }
                Ok(Decl::Basis {
                    name,
                    targets,
                    outcomes,
                })
            }
            "prepare" => {
                let targets = self.product("a factor name")?;
                self.expect(TokenKind::Equals)?;
                let amplitude = self.amplitude()?;
                Ok(Decl::Prepare { targets, amplitude })
            }
            "measure" => {
                let observable = self.ident("a basis or factor name")?;
                self.expect_word("by")?;
                let recorder = self.ident("a recorder")?;
                let collapse = if self.at_word("collapse") {
                    self.bump();
                    if self.eat(&TokenKind::Equals) {
                        Collapse::Select(self.ident("an outcome")?)
                    } else {
                        Collapse::Yes
                    }
                } else {
                    Collapse::No
                };
                Ok(Decl::Measure {
                    observable,
                    recorder,
                    collapse,
                })
            }
            "control" => {
                let control = self.ident("a control factor")?;
                self.expect(TokenKind::Colon)?;
                let label = self.ident("a control label")?;
                self.expect_word("apply")?;
                let basis = self.ident("a basis name")?;
                self.expect_word("on")?;
                let targets = self.product("a factor name")?;
                Ok(Decl::Control {
                    control,
                    label,
                    basis,
                    targets,
                })
            }
            "statement" => {
                let id = self.ident("a statement name")?;
                self.expect(TokenKind::Colon)?;
                let modality = if self.at_word("certain") {
                    ModalityKw::Certain
                } else if self.at_word("possible") {
                    ModalityKw::Possible
                } else {
                    return Err(self.expected("`certain` or `possible`"));
                };
                self.bump();
                self.expect(TokenKind::LParen)?;
                let event = self.predicate()?;
                let condition = if self.at_word("given") {
                    self.bump();
                    Some(self.predicate()?)
                } else {
                    None
                };
                self.expect(TokenKind::RParen)?;
                let expect = if self.at_word("expect") {
                    self.bump();
                    let v = self.ident("HOLDS, FAILS or VACUOUS")?;
                    if !["HOLDS", "FAILS", "VACUOUS"].contains(&v.as_str()) {
                        let span = v.span;
                        return Err(self.error(
                            span,
                            format!("unknown verdict `{v}`"),
                            Some("expected HOLDS, FAILS or VACUOUS"),
                        ));
                    }
                    Some(v)
                } else {
                    None
                };
                Ok(Decl::Statement {
                    id,
                    modality,
                    event,
                    condition,
                    expect,
                })
            }
            "option" => {
                let key = self.ident("an option name")?;
                self.expect(TokenKind::Equals)?;
                let mut values = vec![self.ident("an option value")?];
                while self.eat(&TokenKind::Comma) {
                    values.push(self.ident("an option value")?);
                }
                Ok(Decl::Option { key, values })
            }
            _ => unreachable!("caller checks keywords"),
        }
    }

    /// Skips to the next declaration keyword outside braces.
    fn recover(&mut self) {
        while let Some(k) = self.peek() {
            if self.depth == 0 && matches!(k, TokenKind::Ident(s) if is_keyword(s)) {
                return;
            }
            self.bump();
        }
    }

    fn document(&mut self) -> Document {
        let mut decls = Vec::new();
        while let Some(kind) = self.peek().cloned() {
            let start = self.span();
            match kind {
                TokenKind::Ident(word) if is_keyword(&word) => {
                    self.bump();
                    self.depth = 0;
                    match self.decl(&word) {
                        Ok(node) => decls.push(Spanned {
                            node,
                            span: start.to(self.prev_span()),
                        }),
                        Err(Reported) => self.recover(),
                    }
                }
                _ => {
                    let message = format!("expected a declaration, found {}", self.found());
                    self.error(
                        start,
                        message,
                        Some("declarations start with factor, agent, basis, prepare, measure, control, statement or option"),
                    );
                    self.bump();
                    self.recover();
                }
            }
        }
        Document { decls }
    }
}

/// Parses `text` into a document, or returns every syntax diagnostic found.
pub fn parse_document(text: &str) -> Result<Document, Vec<Diagnostic>> {
    let end = end_of(text);
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        depth: 0,
        eof: Span { start: end, end },
        diagnostics: Vec::new(),
    };
    let doc = p.document();
    if p.diagnostics.is_empty() {
        Ok(doc)
    } else {
        Err(p.diagnostics)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn messages(text: &str) -> Vec<String> {
        parse_document(text)
            .unwrap_err()
            .into_iter()
            .map(|d| d.message)
            .collect()
    }

    #[test]
    fn parses_every_declaration_kind() {
        let doc = parse_document(
            "factor coin { heads, tails }\n\
             agent Fbar\n\
             basis B on coin ⊗ Fbar { u = 1/sqrt(2) heads*heads - sqrt(1/2) tails*tails, v = heads*tails }\n\
             prepare coin = sqrt(1/3) heads + sqrt(2/3) tails\n\
             measure coin by Fbar collapse = tails\n\
             control Fbar : tails apply B on coin*Fbar\n\
             statement S : certain(Fbar = tails and Fbar = tails given Fbar = heads) expect FAILS\n\
             option report = Fbar, Fbar\n",
        )
        .unwrap();
        assert_eq!(doc.decls.len(), 8);
        let Decl::Basis { outcomes, .. } = &doc.decls[2].node else { panic!() };
        assert_eq!(outcomes.len(), 2);
        assert_eq!(outcomes[0].amplitude.terms.len(), 2);
        assert!(outcomes[0].amplitude.terms[1].negative);
        assert_eq!(outcomes[1].amplitude.terms[0].coef, None);
    }

    #[test]
    fn decimal_gets_a_hint() {
        let d = parse_document("prepare coin = 0.5 heads").unwrap_err();
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("decimal"));
        assert!(d[0].hint.as_deref().unwrap().contains("1/2"));
    }

    #[test]
    fn recovery_reports_each_broken_declaration() {
        let m = messages("factor { a, b }\nagent\nfactor ok { a, b }\nmeasure x y\n");
        assert_eq!(m.len(), 3, "{m:?}");
        assert!(m[0].contains("factor name"));
        assert!(m[1].contains("agent name"));
        assert!(m[2].contains("`by`"));
    }

    #[test]
    fn recovery_skips_braced_blocks() {
        let m = messages("basis B on a { u = 1 ? factor x }\nagent\n");
        assert_eq!(m.len(), 2, "{m:?}");
    }

    #[test]
    fn reserved_words_are_not_names() {
        let m = messages("agent measure");
        assert!(m[0].contains("reserved"));
    }

    #[test]
    fn stray_tokens_are_reported() {
        let m = messages("= heads");
        assert!(m[0].contains("expected a declaration"));
    }

    #[test]
    fn one_label_factor_rejected() {
        let m = messages("factor x { a }");
        assert!(m[0].contains("at least two"));
    }

    #[test]
    fn eof_diagnostic_points_past_last_char() {
        let d = parse_document("agent").unwrap_err();
        assert_eq!((d[0].span.start.line, d[0].span.start.col), (1, 6));
        assert!(d[0].message.contains("end of file"));
    }
}
