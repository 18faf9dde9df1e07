//! Lexer and recursive-descent parser for `.fm` source.
//!
//! ```text
//! program := decl* term
//! decl    := 'def' ident '=' term ';'  |  'type' ident '=' type ';'
//! term    := 'fun' '(' ident ':' type ')' term
//!          | 'tfun' '(' ident '<:' type ')' term
//!          | app (':=' term)?              -- lhs must end in a field access
//! app     := prefix prefix*
//! prefix  := 'seal' prefix | postfix
//! postfix := atom ('.' ident | '[' type ']')*
//! atom    := ident | nat | '(' term ')' | '{' (ident '=' term),* '}'
//!
//! type    := 'forall' '(' ident '<:' type ')' type | arrow
//! arrow   := inter ('->' arrow)?
//! inter   := ro ('&' ro)*
//! ro      := 'readonly' ro | tatom
//! tatom   := 'Top' | 'Nat' | ident | '(' type ')' | '{' (ident ':' type),+ '}'
//! ```

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::diag::Diagnostic;
use crate::subst::substitute_term;
use crate::syntax::{Name, Span, Term, TermKind, Type};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u64),
    Loc,
    Fun,
    TFun,
    Forall,
    Seal,
    Readonly,
    Top,
    NatTy,
    Def,
    TypeKw,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Eq,
    Assign,
    Dot,
    Amp,
    Arrow,
    SubBound,
    Semi,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Nat(n) => format!("number `{n}`"),
        Tok::Loc => "location literal".to_owned(),
        Tok::Eof => "end of input".to_owned(),
        other => {
            let s = match other {
                Tok::Fun => "fun",
                Tok::TFun => "tfun",
                Tok::Forall => "forall",
                Tok::Seal => "seal",
                Tok::Readonly => "readonly",
                Tok::Top => "Top",
                Tok::NatTy => "Nat",
                Tok::Def => "def",
                Tok::TypeKw => "type",
                Tok::LParen => "(",
                Tok::RParen => ")",
                Tok::LBrace => "{",
                Tok::RBrace => "}",
                Tok::LBracket => "[",
                Tok::RBracket => "]",
                Tok::Comma => ",",
                Tok::Colon => ":",
                Tok::Eq => "=",
                Tok::Assign => ":=",
                Tok::Dot => ".",
                Tok::Amp => "&",
                Tok::Arrow => "->",
                Tok::SubBound => "<:",
                Tok::Semi => ";",
                _ => unreachable!(),
            };
            format!("`{s}`")
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let two = |a: u8, b: u8| c == a && bytes.get(i + 1) == Some(&b);
        let tok = if two(b':', b'=') {
            i += 2;
            Tok::Assign
        } else if two(b'-', b'>') {
            i += 2;
            Tok::Arrow
        } else if two(b'<', b':') {
            i += 2;
            Tok::SubBound
        } else if c == b'0' && matches!(bytes.get(i + 1), Some(b'x' | b'X')) {
            i += 2;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            Tok::Loc
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let n = text.parse::<u64>().map_err(|_| {
                Diagnostic::error("syntax", Span::new(start, i), format!("numeral `{text}` is too large"))
            })?;
            Tok::Nat(n)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
            {
                i += 1;
            }
            match &src[start..i] {
                "fun" => Tok::Fun,
                "tfun" => Tok::TFun,
                "forall" => Tok::Forall,
                "seal" => Tok::Seal,
                "readonly" => Tok::Readonly,
                "Top" => Tok::Top,
                "Nat" => Tok::NatTy,
                "def" => Tok::Def,
                "type" => Tok::TypeKw,
                s => Tok::Ident(s.to_owned()),
            }
        } else {
            i += 1;
            match c {
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'{' => Tok::LBrace,
                b'}' => Tok::RBrace,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                b',' => Tok::Comma,
                b':' => Tok::Colon,
                b'=' => Tok::Eq,
                b'.' => Tok::Dot,
                b'&' => Tok::Amp,
                b';' => Tok::Semi,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    let end = start + ch.len_utf8();
                    return Err(Diagnostic::error(
                        "syntax",
                        Span::new(start, end),
                        format!("unexpected character `{ch}`"),
                    ));
                }
            }
        };
        out.push((tok, Span::new(start, i)));
    }
    out.push((Tok::Eof, Span::new(src.len(), src.len())));
    Ok(out)
}

/// A parsed source file: the main term with all `def`s and `type`
/// abbreviations already expanded.
#[derive(Clone, Debug)]
pub struct Program {
    pub main: Term,
    /// Names of the `def`s, in declaration order, with their expanded bodies.
    pub defs: Vec<(Name, Term)>,
    pub type_aliases: Vec<(Name, Type)>,
}

struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    src_len: usize,
    aliases: BTreeMap<Name, Type>,
    /// Type variables bound by enclosing `forall`/`tfun`; they shadow aliases.
    ty_scope: Vec<Name>,
    _src: &'a str,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            src_len: src.len(),
            aliases: BTreeMap::new(),
            ty_scope: Vec::new(),
            _src: src,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].1.end
        }
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        let (tok, span) = &self.toks[self.pos];
        if *tok == Tok::Loc {
            return Diagnostic::error(
                "location-literal",
                *span,
                "location literals are runtime-only and cannot appear in source",
            );
        }
        let span = if span.start >= self.src_len && self.src_len > 0 {
            Span::new(self.src_len - 1, self.src_len)
        } else {
            *span
        };
        Diagnostic::error("syntax", span, format!("expected {wanted}, found {}", describe(tok)))
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&describe(&t)))
        }
    }

    fn ident(&mut self) -> PResult<(Name, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut defs: Vec<(Name, Term)> = Vec::new();
        let mut aliases = Vec::new();
        loop {
            match self.peek() {
                Tok::Def => {
                    self.bump();
                    let (name, _) = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let mut body = self.term()?;
                    self.expect(Tok::Semi)?;
                    for (n, b) in defs.iter().rev() {
                        body = substitute_term(&body, n, b);
                    }
                    defs.push((name, body));
                }
                Tok::TypeKw => {
                    self.bump();
                    let (name, _) = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let ty = self.ty()?;
                    self.expect(Tok::Semi)?;
                    self.aliases.insert(name.clone(), ty.clone());
                    aliases.push((name, ty));
                }
                _ => break,
            }
        }
        let mut main = self.term()?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of input"));
        }
        for (n, b) in defs.iter().rev() {
            main = substitute_term(&main, n, b);
        }
        Ok(Program { main, defs, type_aliases: aliases })
    }

    fn term(&mut self) -> PResult<Term> {
        let start = self.span().start;
        match self.peek() {
            Tok::Fun => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (x, _) = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::RParen)?;
                let body = self.term()?;
                let sp = Span::new(start, self.prev_end());
                Ok(Term::new(TermKind::Abs(x, ty, Box::new(body)), sp))
            }
            Tok::TFun => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (x, _) = self.ident()?;
                self.expect(Tok::SubBound)?;
                let bound = self.ty()?;
                self.expect(Tok::RParen)?;
                self.ty_scope.push(x.clone());
                let body = self.term();
                self.ty_scope.pop();
                let sp = Span::new(start, self.prev_end());
                Ok(Term::new(TermKind::TyAbs(x, bound, Box::new(body?)), sp))
            }
            _ => {
                let lhs = self.app()?;
                if *self.peek() != Tok::Assign {
                    return Ok(lhs);
                }
                let assign_span = self.bump().1;
                let rhs = self.term()?;
                let sp = Span::new(start, self.prev_end());
                match lhs.kind {
                    TermKind::Read(target, label) => {
                        Ok(Term::new(TermKind::Write(target, label, Box::new(rhs)), sp))
                    }
                    _ => Err(Diagnostic::error(
                        "syntax",
                        lhs.span.join(assign_span),
                        "the left side of `:=` must be a field access `t.x`",
                    )),
                }
            }
        }
    }

    fn starts_prefix(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Seal | Tok::Ident(_) | Tok::Nat(_) | Tok::LParen | Tok::LBrace | Tok::Loc
        )
    }

    fn app(&mut self) -> PResult<Term> {
        let mut f = self.prefix()?;
        while self.starts_prefix() {
            let a = self.prefix()?;
            let sp = f.span.join(a.span);
            f = Term::new(TermKind::App(Box::new(f), Box::new(a)), sp);
        }
        Ok(f)
    }

    fn prefix(&mut self) -> PResult<Term> {
        if *self.peek() == Tok::Seal {
            let start = self.bump().1.start;
            let inner = self.prefix()?;
            let sp = Span::new(start, inner.span.end);
            return Ok(Term::new(TermKind::Seal(Box::new(inner)), sp));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Term> {
        let mut t = self.atom()?;
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                    let (label, lsp) = self.ident()?;
                    let sp = Span::new(t.span.start, lsp.end);
                    t = Term::new(TermKind::Read(Box::new(t), label), sp);
                }
                Tok::LBracket => {
                    self.bump();
                    let ty = self.ty()?;
                    let end = self.expect(Tok::RBracket)?.end;
                    let sp = Span::new(t.span.start, end);
                    t = Term::new(TermKind::TyApp(Box::new(t), ty), sp);
                }
                _ => return Ok(t),
            }
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                let sp = self.bump().1;
                Ok(Term::new(TermKind::Var(x), sp))
            }
            Tok::Nat(n) => {
                let sp = self.bump().1;
                Ok(Term::new(TermKind::Nat(n), sp))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::LBrace => {
                let start = self.bump().1.start;
                let mut fields: Vec<(Name, Term)> = Vec::new();
                if *self.peek() != Tok::RBrace {
                    loop {
                        let (label, lsp) = self.ident()?;
                        if fields.iter().any(|(l, _)| *l == label) {
                            return Err(Diagnostic::error(
                                "duplicate-label",
                                lsp,
                                format!("field `{label}` appears twice in this record"),
                            ));
                        }
                        self.expect(Tok::Eq)?;
                        let t = self.term()?;
                        fields.push((label, t));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                let end = self.expect(Tok::RBrace)?.end;
                Ok(Term::new(TermKind::Record(fields), Span::new(start, end)))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        if *self.peek() == Tok::Forall {
            self.bump();
            self.expect(Tok::LParen)?;
            let (x, _) = self.ident()?;
            self.expect(Tok::SubBound)?;
            let bound = self.ty()?;
            self.expect(Tok::RParen)?;
            self.ty_scope.push(x.clone());
            let body = self.ty();
            self.ty_scope.pop();
            return Ok(Type::forall(x, bound, body?));
        }
        let dom = self.ty_inter()?;
        if self.eat(&Tok::Arrow) {
            let cod = self.ty()?;
            return Ok(Type::arrow(dom, cod));
        }
        Ok(dom)
    }

    fn ty_inter(&mut self) -> PResult<Type> {
        let mut t = self.ty_ro()?;
        while self.eat(&Tok::Amp) {
            let r = self.ty_ro()?;
            t = Type::inter(t, r);
        }
        Ok(t)
    }

    fn ty_ro(&mut self) -> PResult<Type> {
        if self.eat(&Tok::Readonly) {
            return Ok(Type::readonly(self.ty_ro()?));
        }
        self.ty_atom()
    }

    fn ty_atom(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Top => {
                self.bump();
                Ok(Type::Top)
            }
            Tok::NatTy => {
                self.bump();
                Ok(Type::Nat)
            }
            Tok::Ident(x) => {
                self.bump();
                if !self.ty_scope.contains(&x) {
                    if let Some(t) = self.aliases.get(&x) {
                        return Ok(t.clone());
                    }
                }
                Ok(Type::Var(x))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::LBrace => {
                self.bump();
                let mut fields: Vec<(Name, Type)> = Vec::new();
                loop {
                    let (label, lsp) = self.ident()?;
                    if fields.iter().any(|(l, _)| *l == label) {
                        return Err(Diagnostic::error(
                            "duplicate-label",
                            lsp,
                            format!("field `{label}` appears twice in this record type"),
                        ));
                    }
                    self.expect(Tok::Colon)?;
                    fields.push((label, self.ty()?));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Type::record_of(fields))
            }
            _ => Err(self.unexpected("a type")),
        }
    }
}

/// Parses a whole source file.
pub fn parse_program(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let mut p = Parser::new(src).map_err(|d| vec![d])?;
    p.program().map_err(|d| vec![d])
}

/// Parses a term; `def` and `type` declarations may precede it.
pub fn parse_term(src: &str) -> Result<Term, Vec<Diagnostic>> {
    parse_program(src).map(|p| p.main)
}

pub fn parse_type(src: &str) -> Result<Type, Vec<Diagnostic>> {
    let mut p = Parser::new(src).map_err(|d| vec![d])?;
    let t = p.ty().map_err(|d| vec![d])?;
    if *p.peek() != Tok::Eof {
        return Err(vec![p.unexpected("end of input")]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(l: &str, t: Term) -> Term {
        Term::record([(l, t)])
    }

    #[test]
    fn write_to_literal() {
        let t = parse_term("{x = 10}.x := 5").unwrap();
        assert_eq!(t, Term::write(rec("x", Term::nat(10)), "x", Term::nat(5)));
    }

    #[test]
    fn sealed_nested_literal() {
        let t = parse_term("seal {y = {x = 10}}").unwrap();
        assert_eq!(t, Term::seal(rec("y", rec("x", Term::nat(10)))));
    }

    #[test]
    fn identity_function() {
        let t = parse_term("fun(x: Top) x").unwrap();
        assert_eq!(t, Term::abs("x", Type::Top, Term::var("x")));
    }

    #[test]
    fn sealed_then_read() {
        let t = parse_term("(seal {y = {x = 10}}).y").unwrap();
        assert_eq!(t, Term::read(Term::seal(rec("y", rec("x", Term::nat(10)))), "y"));
        // without parentheses the seal covers the read
        let u = parse_term("seal {y = 1}.y").unwrap();
        assert_eq!(u, Term::seal(Term::read(rec("y", Term::nat(1)), "y")));
    }

    #[test]
    fn application_is_left_associative() {
        let t = parse_term("f x y").unwrap();
        assert_eq!(t, Term::app(Term::app(Term::var("f"), Term::var("x")), Term::var("y")));
        let u = parse_term("f [Nat] x").unwrap();
        assert_eq!(u, Term::app(Term::ty_app(Term::var("f"), Type::Nat), Term::var("x")));
    }

    #[test]
    fn nested_write() {
        let t = parse_term("y.first.first := 5").unwrap();
        assert_eq!(
            t,
            Term::write(Term::read(Term::var("y"), "first"), "first", Term::nat(5))
        );
    }

    #[test]
    fn type_precedence() {
        let t = parse_type("readonly {x: Nat} & {y: Nat}").unwrap();
        assert_eq!(
            t,
            Type::inter(
                Type::readonly(Type::record("x", Type::Nat)),
                Type::record("y", Type::Nat)
            )
        );
        let f = parse_type("forall(X <: Top) X -> X").unwrap();
        assert_eq!(f, Type::forall("X", Type::Top, Type::arrow(Type::var("X"), Type::var("X"))));
        let r = parse_type("readonly readonly {x: Nat}").unwrap();
        assert_eq!(r, Type::readonly(Type::readonly(Type::record("x", Type::Nat))));
        let a = parse_type("Nat -> Nat -> Top").unwrap();
        assert_eq!(a, Type::arrow(Type::Nat, Type::arrow(Type::Nat, Type::Top)));
        let i = parse_type("A & B & C").unwrap();
        assert_eq!(i, Type::inter(Type::inter(Type::var("A"), Type::var("B")), Type::var("C")));
    }

    #[test]
    fn multi_field_record_type_is_an_intersection() {
        let t = parse_type("{x: Nat, y: Top}").unwrap();
        assert_eq!(
            t,
            Type::inter(Type::record("x", Type::Nat), Type::record("y", Type::Top))
        );
    }

    #[test]
    fn rejects_location_literals() {
        let err = parse_term("{x = 0x0001}").unwrap_err();
        assert_eq!(err[0].code, "location-literal");
        assert_eq!(err[0].span, Span::new(5, 11));
    }

    #[test]
    fn rejects_duplicate_labels() {
        let err = parse_term("{x = 1, x = 2}").unwrap_err();
        assert_eq!(err[0].code, "duplicate-label");
        assert_eq!(err[0].span, Span::new(8, 9));
    }

    #[test]
    fn syntax_error_span_is_in_bounds() {
        for src in ["fun(x: ) x", "{x = }", "(", "f :=", "x.", ""] {
            let err = parse_term(src).unwrap_err();
            assert!(err[0].span.end <= src.len(), "{src:?}: {:?}", err[0]);
        }
    }

    #[test]
    fn defs_and_aliases_expand() {
        let src = "type P = {first: Nat};\n\
                   def id = fun(p: P) p;\n\
                   def twice = fun(p: P) id (id p);\n\
                   twice {first = 1}";
        let t = parse_term(src).unwrap();
        assert!(crate::subst::free_vars(&t).is_empty());
        let p = Type::record("first", Type::Nat);
        let id = Term::abs("p", p.clone(), Term::var("p"));
        let twice = Term::abs(
            "p",
            p,
            Term::app(id.clone(), Term::app(id, Term::var("p"))),
        );
        assert_eq!(t, Term::app(twice, rec("first", Term::nat(1))));
    }

    #[test]
    fn alias_shadowed_by_binder() {
        let t = parse_type("type X = Nat; X").err();
        assert!(t.is_some(), "parse_type takes no declarations");
        let src = "type X = Nat; tfun(X <: Top) fun(x: X) x";
        let t = parse_term(src).unwrap();
        assert_eq!(
            t,
            Term::ty_abs("X", Type::Top, Term::abs("x", Type::var("X"), Term::var("x")))
        );
    }

    #[test]
    fn write_needs_field_access() {
        let err = parse_term("x := 1").unwrap_err();
        assert_eq!(err[0].code, "syntax");
    }

    #[test]
    fn spans_cover_nodes() {
        let src = "y.first := 7";
        let t = parse_term(src).unwrap();
        assert_eq!(t.span, Span::new(0, src.len()));
        let src2 = "fun(y: Top) y.first := 7";
        let t2 = parse_term(src2).unwrap();
        let TermKind::Abs(_, _, body) = &t2.kind else { panic!() };
        assert_eq!(&src2[body.span.start..body.span.end], "y.first := 7");
    }
}
