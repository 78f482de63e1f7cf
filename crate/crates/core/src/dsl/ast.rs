use std::fmt;

use num_bigint::BigUint;

/// 1-based line and column (in chars) plus the byte offset.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
    pub offset: usize,
}

/// Positions never take part in AST equality.
impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start.line, self.start.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn as_str(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `num` or `num/den` with non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: BigUint,
    pub den: Option<BigUint>,
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.den {
            Some(d) => write!(f, "{}/{}", self.num, d),
            None => write!(f, "{}", self.num),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coef {
    Rational(Rational),
    /// `q/sqrt(n)`.
    OverSqrt(Rational, BigUint),
    /// `sqrt(q)`.
    Sqrt(Rational),
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coef::Rational(q) => write!(f, "{q}"),
            Coef::OverSqrt(q, n) => write!(f, "{q}/sqrt({n})"),
            Coef::Sqrt(q) => write!(f, "sqrt({q})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub negative: bool,
    /// Absent means 1.
    pub coef: Option<Coef>,
    /// One label per target factor.
    pub product: Vec<Ident>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmpExpr {
    pub terms: Vec<Term>,
    pub span: Span,
}

impl fmt::Display for AmpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            match (i, t.negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if let Some(c) = &t.coef {
                write!(f, "{c} ")?;
            }
            let labels: Vec<&str> = t.product.iter().map(Ident::as_str).collect();
            f.write_str(&labels.join("*"))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeDef {
    pub label: Ident,
    pub amplitude: AmpExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub variable: Ident,
    pub value: Ident,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateExpr {
    pub atoms: Vec<Atom>,
}

impl fmt::Display for PredicateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{} = {}", a.variable, a.value)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModalityKw {
    Certain,
    Possible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Collapse {
    No,
    Yes,
    Select(Ident),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Factor {
        name: Ident,
        labels: Vec<Ident>,
    },
    Agent {
        name: Ident,
    },
    Basis {
        name: Ident,
        targets: Vec<Ident>,
        outcomes: Vec<OutcomeDef>,
    },
    Prepare {
        targets: Vec<Ident>,
        amplitude: AmpExpr,
    },
    Measure {
        observable: Ident,
        recorder: Ident,
        collapse: Collapse,
    },
    Control {
        control: Ident,
        label: Ident,
        basis: Ident,
        targets: Vec<Ident>,
    },
    Statement {
        id: Ident,
        modality: ModalityKw,
        event: PredicateExpr,
        condition: Option<PredicateExpr>,
        expect: Option<Ident>,
    },
    Option {
        key: Ident,
        values: Vec<Ident>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned<T> {
    pub node: T,
    pub span: Span,
}

/// Parsed scenario file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub decls: Vec<Spanned<Decl>>,
}
