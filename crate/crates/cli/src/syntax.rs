//! Text syntax for polynomials, vector fields, forms and parameter documents.
//!
//! ```text
//! poly   := term (('+' | '-') term)*
//! term   := '-'? factor ('*' factor)*
//! factor := int ('/' int)? | name ('^' int)? | '(' poly ')' ('^' int)?
//! field  := '[' poly (',' poly)* ']'
//! form   := like poly, where a factor may also be 'xi' '[' int (',' int)* ']'
//! ```
//!
//! The printers in `formdef` emit a subset of this grammar, so `parse(print(v)) == v`.

use std::collections::BTreeMap;
use std::sync::Arc;

use formdef::deformation::{ParamAssignment, FAMILIES};
use formdef::exterior::XiMonomial;
use formdef::poly::VarEnv;
use formdef::{Error, Form, Poly, Rational, Result, VectorField};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Sym(char),
}

fn tokenize(src: &str, what: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
            out.push((pos, Tok::Int(text.parse().expect("digits"))));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((
                pos,
                Tok::Name(chars[start..i].iter().map(|(_, c)| c).collect()),
            ));
        } else if "+-*/^()[],".contains(c) {
            out.push((pos, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(parse_error(
                what,
                src,
                pos,
                format!("unexpected character `{c}`"),
            ));
        }
    }
    Ok(out)
}

fn parse_error(what: &str, src: &str, pos: usize, message: String) -> Error {
    let column = src[..pos.min(src.len())].chars().count() + 1;
    Error::Parse {
        location: format!("{what}, column {column}"),
        message,
    }
}

/// A form value under construction: ξ-monomial to coefficient.
type Terms = BTreeMap<XiMonomial, Poly>;

struct Parser<'a> {
    src: &'a str,
    what: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    env: Arc<VarEnv>,
    allow_xi: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, what: &'a str, env: &Arc<VarEnv>, allow_xi: bool) -> Result<Self> {
        Ok(Parser {
            src,
            what,
            toks: tokenize(src, what)?,
            pos: 0,
            env: env.clone(),
            allow_xi,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(p, _)| *p)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        parse_error(self.what, self.src, self.offset(), message.into())
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn int(&mut self) -> Result<BigInt> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error("expected an integer")),
        }
    }

    fn small(&mut self, what: &str) -> Result<u32> {
        let at = self.offset();
        let v = self.int()?;
        u32::try_from(&v)
            .map_err(|_| parse_error(self.what, self.src, at, format!("{what} {v} too large")))
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    fn sum(&mut self) -> Result<Terms> {
        let mut acc = Terms::new();
        let mut negate = self.eat('-');
        loop {
            let t = self.product()?;
            for (xi, p) in t {
                let p = if negate { -&p } else { p };
                add_into(&mut acc, xi, p);
            }
            if self.eat('+') {
                negate = false;
            } else if self.eat('-') {
                negate = true;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Terms> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            let rhs = self.factor()?;
            acc = multiply(&acc, &rhs);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Terms> {
        let base = match self.peek().cloned() {
            Some(Tok::Int(num)) => {
                self.pos += 1;
                let q = if self.eat('/') {
                    let at = self.offset();
                    let den = self.int()?;
                    if den == BigInt::from(0) {
                        return Err(parse_error(
                            self.what,
                            self.src,
                            at,
                            "zero denominator".into(),
                        ));
                    }
                    Rational::new(num, den)
                } else {
                    Rational::from_integer(num)
                };
                scalar_terms(Poly::constant(&self.env, q))
            }
            Some(Tok::Name(name)) if name == "xi" && self.allow_xi => {
                self.pos += 1;
                return self.xi_factor();
            }
            Some(Tok::Name(name)) => {
                let at = self.offset();
                self.pos += 1;
                let v = Poly::var(&self.env, &name).map_err(|_| {
                    parse_error(
                        self.what,
                        self.src,
                        at,
                        format!("unknown variable `{name}`"),
                    )
                })?;
                scalar_terms(v)
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.sum()?;
                self.expect(')')?;
                inner
            }
            _ => return Err(self.error("expected a number, a variable or `(`")),
        };
        if self.eat('^') {
            let e = self.small("exponent")?;
            let mut out = scalar_terms(Poly::one(&self.env));
            for _ in 0..e {
                out = multiply(&out, &base);
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn xi_factor(&mut self) -> Result<Terms> {
        self.expect('[')?;
        let mut idx = Vec::new();
        if !self.eat(']') {
            loop {
                let at = self.offset();
                let i = self.small("odd index")? as usize;
                if i == 0 || i > self.env.n() {
                    return Err(parse_error(
                        self.what,
                        self.src,
                        at,
                        format!("odd index {i} outside 1..={}", self.env.n()),
                    ));
                }
                idx.push(i - 1);
                if self.eat(']') {
                    break;
                }
                self.expect(',')?;
            }
        }
        let mut out = Terms::new();
        if let Some((sign, xi)) = XiMonomial::from_unsorted(&idx) {
            out.insert(xi, Poly::from_int(&self.env, sign));
        }
        Ok(out)
    }
}

fn scalar_terms(p: Poly) -> Terms {
    let mut t = Terms::new();
    if !p.is_zero() {
        t.insert(XiMonomial::ONE, p);
    }
    t
}

fn add_into(acc: &mut Terms, xi: XiMonomial, p: Poly) {
    let sum = match acc.remove(&xi) {
        Some(q) => &q + &p,
        None => p,
    };
    if !sum.is_zero() {
        acc.insert(xi, sum);
    }
}

fn multiply(a: &Terms, b: &Terms) -> Terms {
    let mut out = Terms::new();
    for (xa, pa) in a {
        for (xb, pb) in b {
            if let Some((sign, xi)) = xa.mul(*xb) {
                let p = &(pa * pb) * &Poly::from_int(pa.env(), sign);
                add_into(&mut out, xi, p);
            }
        }
    }
    out
}

pub fn parse_poly(env: &Arc<VarEnv>, src: &str) -> Result<Poly> {
    parse_poly_at(env, src, "polynomial")
}

fn parse_poly_at(env: &Arc<VarEnv>, src: &str, what: &str) -> Result<Poly> {
    let mut p = Parser::new(src, what, env, false)?;
    let terms = p.sum()?;
    p.finish()?;
    Ok(terms
        .get(&XiMonomial::ONE)
        .cloned()
        .unwrap_or_else(|| Poly::zero(env)))
}

pub fn parse_rational(src: &str) -> Result<Rational> {
    let env = VarEnv::new(2)?;
    let p = parse_poly_at(&env, src, "rational")?;
    if !p.is_constant() {
        return Err(parse_error(
            "rational",
            src,
            0,
            "expected a rational number".into(),
        ));
    }
    Ok(p.constant_term())
}

pub fn parse_form(env: &Arc<VarEnv>, src: &str) -> Result<Form> {
    let mut p = Parser::new(src, "form", env, true)?;
    let terms = p.sum()?;
    p.finish()?;
    let mut out = Form::zero(env);
    for (xi, c) in terms {
        out = &out + &Form::term(c, xi);
    }
    Ok(out)
}

/// `[p1, ..., pn]` over the spatial environment of `env`.
pub fn parse_field(env: &Arc<VarEnv>, src: &str) -> Result<VectorField> {
    let mut p = Parser::new(src, "vector field", env, false)?;
    p.expect('[')?;
    let mut components = Vec::new();
    loop {
        let start = p.offset();
        let terms = p.sum()?;
        let c = terms
            .get(&XiMonomial::ONE)
            .cloned()
            .unwrap_or_else(|| Poly::zero(env));
        if c.has_params() {
            return Err(parse_error(
                "vector field",
                src,
                start,
                format!("component {} mentions a parameter", components.len() + 1),
            ));
        }
        components.push(c);
        if p.eat(']') {
            break;
        }
        p.expect(',')?;
    }
    p.finish()?;
    if components.len() != env.n() {
        return Err(Error::Arity {
            what: "vector field components".into(),
            expected: env.n(),
            found: components.len(),
        });
    }
    VectorField::new(components)
}

/// The parameter document: `n`, optional declared parameter names, and the four families.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ParamDocument {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<String>>,
    pub t0: Vec<String>,
    pub t1: Vec<String>,
    pub t1tilde: Vec<String>,
    pub t2: Vec<String>,
}

impl ParamDocument {
    fn families(&self) -> [&Vec<String>; 4] {
        [&self.t0, &self.t1, &self.t1tilde, &self.t2]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!(
                "parameter document, line {}, column {}",
                e.line(),
                e.column()
            ),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_assignment(t: &ParamAssignment) -> Self {
        let strings = |v: &[Poly]| v.iter().map(|p| p.to_string()).collect();
        ParamDocument {
            n: t.n(),
            params: Some(t.env().param_names().to_vec()),
            t0: strings(&t.t0),
            t1: strings(&t.t1),
            t1tilde: strings(&t.t1_tilde),
            t2: strings(&t.t2),
        }
    }

    /// Parameter names: the declared list, else identifiers in order of first appearance.
    fn names(&self) -> Result<Vec<String>> {
        if let Some(names) = &self.params {
            return Ok(names.clone());
        }
        let spatial: Vec<String> = (1..=self.n).map(|i| format!("x{i}")).collect();
        let mut names: Vec<String> = Vec::new();
        for (f, family) in self.families().into_iter().enumerate() {
            for (k, entry) in family.iter().enumerate() {
                let what = format!("{}[{k}]", FAMILIES[f]);
                for (pos, tok) in tokenize(entry, &what)? {
                    if let Tok::Name(name) = tok {
                        if spatial.contains(&name) || name == "xi" {
                            return Err(parse_error(
                                &what,
                                entry,
                                pos,
                                format!(
                                    "parameter entries cannot mention spatial variable `{name}`"
                                ),
                            ));
                        }
                        if !names.contains(&name) {
                            names.push(name);
                        }
                    }
                }
            }
        }
        Ok(names)
    }

    pub fn to_assignment(&self) -> Result<ParamAssignment> {
        if self.n < 2 {
            return Err(Error::Dimension(self.n));
        }
        let expected = [self.n + 1, self.n, self.n, self.n - 1];
        for (f, family) in self.families().into_iter().enumerate() {
            if family.len() != expected[f] {
                return Err(Error::Arity {
                    what: format!("parameter family {} for n = {}", FAMILIES[f], self.n),
                    expected: expected[f],
                    found: family.len(),
                });
            }
        }
        let env = VarEnv::with_params(self.n, &self.names()?)?;
        let mut parsed: Vec<Vec<Poly>> = Vec::new();
        for (f, family) in self.families().into_iter().enumerate() {
            let mut polys = Vec::new();
            for (k, entry) in family.iter().enumerate() {
                let what = format!("{}[{k}]", FAMILIES[f]);
                let p = parse_poly_at(&env, entry, &what)?;
                if p.has_spatial() {
                    return Err(parse_error(
                        &what,
                        entry,
                        0,
                        "parameter entries cannot mention spatial variables".into(),
                    ));
                }
                polys.push(p);
            }
            parsed.push(polys);
        }
        let t2 = parsed.pop().unwrap();
        let t1_tilde = parsed.pop().unwrap();
        let t1 = parsed.pop().unwrap();
        let t0 = parsed.pop().unwrap();
        ParamAssignment::new(&env, t0, t1, t1_tilde, t2)
    }
}

pub fn parse_params(text: &str) -> Result<ParamAssignment> {
    ParamDocument::from_json(text)?.to_assignment()
}

#[cfg(test)]
mod tests {
    use super::*;
    use formdef::scalar::{int, rat};

    fn env2() -> Arc<VarEnv> {
        VarEnv::with_params(2, &["t", "s"]).unwrap()
    }

    #[test]
    fn polynomials() {
        let env = env2();
        let p = parse_poly(&env, "(x1 + 1)^2 - 2*x1 - 1").unwrap();
        assert_eq!(p, &Poly::x(&env, 0) * &Poly::x(&env, 0));
        let q = parse_poly(&env, "-3/2*x1^2*t + s").unwrap();
        assert_eq!(q.to_string(), "-3/2*x1^2*t + s");
        assert_eq!(parse_poly(&env, "0").unwrap(), Poly::zero(&env));
        assert_eq!(parse_rational("-6/4").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
    }

    #[test]
    fn errors_carry_locations() {
        let env = env2();
        match parse_poly(&env, "x1 + y") {
            Err(Error::Parse { location, message }) => {
                assert_eq!(location, "polynomial, column 6");
                assert!(message.contains("unknown variable `y`"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_poly(&env, "x1 +"), Err(Error::Parse { .. })));
        assert!(matches!(parse_poly(&env, "1/0"), Err(Error::Parse { .. })));
        assert!(matches!(parse_poly(&env, "x1 $"), Err(Error::Parse { .. })));
    }

    #[test]
    fn fields_and_forms() {
        let env = VarEnv::new(2).unwrap();
        let f = parse_field(&env, "[x1^2, -x2]").unwrap();
        assert_eq!(f.to_string(), "[x1^2, -x2]");
        assert!(matches!(
            parse_field(&env, "[x1]"),
            Err(Error::Arity { .. })
        ));
        let w = parse_form(&env, "x2*xi[2,1] + 3").unwrap();
        assert_eq!(w.to_string(), "3 - x2*xi[1,2]");
        assert!(parse_form(&env, "xi[1]*xi[1]").unwrap().is_zero());
        assert!(parse_form(&env, "xi[3]").is_err());
    }

    #[test]
    fn parameter_documents() {
        let text = r#"{"n": 2, "t0": ["0", "0", "a"], "t1": ["b", "0"], "t1tilde": ["-a", "c"], "t2": ["c"]}"#;
        let t = parse_params(text).unwrap();
        assert_eq!(t.env().param_names(), ["a", "b", "c"]);
        assert!(formdef::deformation::relations(&t).all_zero());
        let back = ParamDocument::from_assignment(&t).to_json();
        assert_eq!(parse_params(&back).unwrap(), t);

        let short =
            r#"{"n": 2, "t0": ["0", "0"], "t1": ["0", "0"], "t1tilde": ["0", "0"], "t2": ["0"]}"#;
        assert!(matches!(
            parse_params(short),
            Err(Error::Arity {
                expected: 3,
                found: 2,
                ..
            })
        ));
        let spatial = r#"{"n": 2, "t0": ["0", "0", "x1"], "t1": ["0", "0"], "t1tilde": ["0", "0"], "t2": ["0"]}"#;
        match parse_params(spatial) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "t0[2], column 1"),
            other => panic!("{other:?}"),
        }
        let undeclared = r#"{"n": 2, "params": ["a"], "t0": ["0", "0", "b"], "t1": ["0", "0"], "t1tilde": ["0", "0"], "t2": ["0"]}"#;
        assert!(matches!(parse_params(undeclared), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_params("{\"n\": 2,"),
            Err(Error::Parse { .. })
        ));
    }
}
