use super::ast::*;
use super::lexer::{syntax, tokenize, Tok, Token};
use super::FrontendError;

const RESERVED: &[&str] = &[
    "MATCH",
    "OPTIONAL",
    "WHERE",
    "WITH",
    "RETURN",
    "DISTINCT",
    "ORDER",
    "BY",
    "ASC",
    "ASCENDING",
    "DESC",
    "DESCENDING",
    "LIMIT",
    "SKIP",
    "UNION",
    "ALL",
    "UNWIND",
    "AS",
    "AND",
    "OR",
    "XOR",
    "NOT",
    "IS",
    "NULL",
    "TRUE",
    "FALSE",
    "EXISTS",
    "CREATE",
    "MERGE",
    "DELETE",
    "DETACH",
    "SET",
    "REMOVE",
    "CALL",
    "YIELD",
    "FOREACH",
    "LOAD",
    "CASE",
    "IN",
];

/// Parse a query of the supported fragment.
pub fn parse(src: &str) -> Result<Query, FrontendError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let q = p.query()?;
    if !p.check(&Tok::Eof) {
        return Err(p.error("unexpected input after end of query"));
    }
    Ok(q)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn check(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.check(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), FrontendError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn error(&self, msg: &str) -> FrontendError {
        let s = self.span();
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            _ => format!("{:?}", self.peek()),
        };
        syntax(s.start, s.end.max(s.start + 1), &format!("{msg}, found {found}"))
    }

    fn is_kw(&self, kw: &str) -> bool {
        self.is_kw_at(0, kw)
    }

    fn is_kw_at(&self, k: usize, kw: &str) -> bool {
        matches!(self.peek_at(k), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), FrontendError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {kw}")))
        }
    }

    /// A variable or alias name: any identifier that is not a keyword.
    fn name(&mut self) -> Result<(String, Span), FrontendError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.advance();
                Ok((s, span))
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    /// A label or property key: keywords are allowed here.
    fn symbol(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error("expected name")),
        }
    }

    fn query(&mut self) -> Result<Query, FrontendError> {
        let mut q = Query::Single(self.single_query()?);
        while self.eat_kw("UNION") {
            let all = self.eat_kw("ALL");
            let right = Query::Single(self.single_query()?);
            q = Query::Union { left: Box::new(q), right: Box::new(right), all };
        }
        Ok(q)
    }

    fn clauses(&mut self) -> Result<Vec<Clause>, FrontendError> {
        let mut clauses = Vec::new();
        loop {
            if self.is_kw("MATCH") || self.is_kw("OPTIONAL") {
                clauses.push(Clause::Match(self.match_clause()?));
            } else if self.eat_kw("WITH") {
                let mut proj = self.projection()?;
                if self.eat_kw("WHERE") {
                    proj.where_ = Some(self.expr()?);
                }
                clauses.push(Clause::With(proj));
            } else if self.is_kw("UNWIND") {
                self.advance();
                let expr = self.expr()?;
                self.expect_kw("AS")?;
                let (alias, span) = self.name()?;
                clauses.push(Clause::Unwind(Unwind { expr, alias, span }));
            } else {
                return Ok(clauses);
            }
        }
    }

    fn single_query(&mut self) -> Result<SingleQuery, FrontendError> {
        let clauses = self.clauses()?;
        if !self.eat_kw("RETURN") {
            return Err(self.error("expected MATCH, OPTIONAL MATCH, WITH, UNWIND or RETURN"));
        }
        let ret = self.projection()?;
        Ok(SingleQuery { clauses, ret })
    }

    fn match_clause(&mut self) -> Result<MatchClause, FrontendError> {
        let optional = self.eat_kw("OPTIONAL");
        self.expect_kw("MATCH")?;
        let mut patterns = vec![self.pattern()?];
        while self.eat(&Tok::Comma) {
            patterns.push(self.pattern()?);
        }
        let where_ = if self.eat_kw("WHERE") { Some(self.expr()?) } else { None };
        Ok(MatchClause { optional, patterns, where_ })
    }

    fn projection(&mut self) -> Result<Projection, FrontendError> {
        let mut proj = Projection { distinct: self.eat_kw("DISTINCT"), ..Default::default() };
        let mut first = true;
        if self.eat(&Tok::Star) {
            proj.star = true;
            first = false;
        }
        loop {
            if !first && !self.eat(&Tok::Comma) {
                break;
            }
            first = false;
            let expr = self.expr()?;
            let alias = if self.eat_kw("AS") { Some(self.name()?.0) } else { None };
            proj.items.push(ProjItem { expr, alias });
        }
        if self.is_kw("ORDER") {
            self.advance();
            self.expect_kw("BY")?;
            loop {
                let expr = self.expr()?;
                let desc = if self.eat_kw("DESC") || self.eat_kw("DESCENDING") {
                    true
                } else {
                    let _ = self.eat_kw("ASC") || self.eat_kw("ASCENDING");
                    false
                };
                proj.order_by.push(SortItem { expr, desc });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        loop {
            if proj.skip.is_none() && self.eat_kw("SKIP") {
                proj.skip = Some(self.count_literal("SKIP")?);
            } else if proj.limit.is_none() && self.eat_kw("LIMIT") {
                proj.limit = Some(self.count_literal("LIMIT")?);
            } else {
                break;
            }
        }
        Ok(proj)
    }

    fn count_literal(&mut self, what: &str) -> Result<i64, FrontendError> {
        match *self.peek() {
            Tok::Int(n) if n <= i64::MAX as u64 => {
                self.advance();
                Ok(n as i64)
            }
            _ => Err(self.error(&format!("{what} takes a non-negative integer literal"))),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, FrontendError> {
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Eq {
            return Err(self.error("named paths are not supported"));
        }
        let start = self.node_pattern()?;
        let mut chain = Vec::new();
        while self.check(&Tok::Minus) || self.check(&Tok::Lt) {
            let rel = self.rel_pattern()?;
            let node = self.node_pattern()?;
            chain.push((rel, node));
        }
        Ok(Pattern { start, chain })
    }

    fn node_pattern(&mut self) -> Result<NodePat, FrontendError> {
        let start = self.span().start;
        self.expect(&Tok::LParen, "'(' to open a node pattern")?;
        let var = if matches!(self.peek(), Tok::Ident(_)) { Some(self.name()?.0) } else { None };
        let mut labels = Vec::new();
        while self.eat(&Tok::Colon) {
            labels.push(self.symbol()?);
        }
        let props = if self.check(&Tok::LBrace) { self.prop_map()? } else { Vec::new() };
        let end = self.span().end;
        self.expect(&Tok::RParen, "')' to close a node pattern")?;
        Ok(NodePat { var, labels, props, span: Span::new(start, end) })
    }

    fn rel_pattern(&mut self) -> Result<RelPat, FrontendError> {
        let start = self.span().start;
        let left = self.eat(&Tok::Lt);
        self.expect(&Tok::Minus, "'-' in relationship pattern")?;
        let mut rel = RelPat {
            var: None,
            labels: Vec::new(),
            props: Vec::new(),
            dir: Direction::Both,
            range: None,
            span: Span::default(),
        };
        if self.eat(&Tok::LBracket) {
            if matches!(self.peek(), Tok::Ident(_)) {
                rel.var = Some(self.name()?.0);
            }
            if self.eat(&Tok::Colon) {
                rel.labels.push(self.symbol()?);
                while self.eat(&Tok::Pipe) {
                    self.eat(&Tok::Colon);
                    rel.labels.push(self.symbol()?);
                }
                if self.check(&Tok::Colon) {
                    return Err(self.error("relationship labels are alternatives, use '|'"));
                }
            }
            if self.check(&Tok::Star) {
                rel.range = Some(self.range()?);
            }
            if self.check(&Tok::LBrace) {
                rel.props = self.prop_map()?;
            }
            self.expect(&Tok::RBracket, "']' to close a relationship pattern")?;
        }
        self.expect(&Tok::Minus, "'-' in relationship pattern")?;
        let right = self.check(&Tok::Gt);
        let end = self.span().end;
        if right {
            self.advance();
        }
        rel.dir = match (left, right) {
            (true, true) => {
                return Err(syntax(start, end, "relationship pattern points both ways"));
            }
            (true, false) => Direction::Left,
            (false, true) => Direction::Right,
            (false, false) => Direction::Both,
        };
        rel.span = Span::new(start, end);
        Ok(rel)
    }

    fn range(&mut self) -> Result<Range, FrontendError> {
        let star = self.span();
        self.expect(&Tok::Star, "'*'")?;
        let lo = if let Tok::Int(n) = *self.peek() {
            self.advance();
            Some(n)
        } else {
            None
        };
        let (min, max) = if self.eat(&Tok::DotDot) {
            let hi = if let Tok::Int(n) = *self.peek() {
                self.advance();
                Some(n)
            } else {
                None
            };
            (lo.unwrap_or(1), hi)
        } else {
            match lo {
                Some(n) => (n, Some(n)),
                None => (1, None),
            }
        };
        let end = self.tokens[self.pos.saturating_sub(1)].span.end;
        let bad = min < 1 || min > u32::MAX as u64 || max.is_some_and(|m| m < min || m > u32::MAX as u64);
        if bad {
            return Err(syntax(star.start, end, "invalid length range: need 1 <= min <= max"));
        }
        Ok(Range { min: min as u32, max: max.map(|m| m as u32) })
    }

    fn prop_map(&mut self) -> Result<Vec<(String, Expr)>, FrontendError> {
        self.expect(&Tok::LBrace, "'{'")?;
        let mut out = Vec::new();
        if !self.check(&Tok::RBrace) {
            loop {
                let key = self.symbol()?;
                self.expect(&Tok::Colon, "':' in map")?;
                out.push((key, self.expr()?));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RBrace, "'}'")?;
        Ok(out)
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.and_expr()?;
        while self.eat_kw("OR") {
            let r = self.and_expr()?;
            e = Expr::Or(Box::new(e), Box::new(r));
        }
        if self.is_kw("XOR") {
            return Err(self.error("XOR is not supported"));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.not_expr()?;
        while self.eat_kw("AND") {
            let r = self.not_expr()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_kw("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, FrontendError> {
        let l = self.unary()?;
        if self.is_kw("IS") {
            self.advance();
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(Expr::IsNull(Box::new(l), negated));
        }
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::Plus | Tok::Minus | Tok::Star => {
                return Err(self.error("arithmetic is not supported"));
            }
            _ => return Ok(l),
        };
        self.advance();
        let r = self.unary()?;
        if matches!(self.peek(), Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge) {
            return Err(self.error("chained comparisons are not supported"));
        }
        Ok(Expr::cmp(op, l, r))
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.eat(&Tok::Minus) {
            if let Tok::Int(n) = *self.peek() {
                let span = self.span();
                self.advance();
                if n > i64::MAX as u64 + 1 {
                    return Err(syntax(span.start, span.end, "integer literal out of range"));
                }
                let v = (n as i128).wrapping_neg() as i64;
                return self.postfix(Expr::Int(v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Plus) {
            return Ok(Expr::Pos(Box::new(self.unary()?)));
        }
        let a = self.atom()?;
        self.postfix(a)
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr, FrontendError> {
        while self.eat(&Tok::Dot) {
            let key = self.symbol()?;
            e = Expr::Prop(Box::new(e), key);
        }
        if self.check(&Tok::LBracket) {
            return Err(self.error("list indexing is not supported"));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                if n > i64::MAX as u64 {
                    return Err(syntax(span.start, span.end, "integer literal out of range"));
                }
                self.advance();
                Ok(Expr::Int(n as i64))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::LBracket => {
                self.advance();
                let mut xs = Vec::new();
                if !self.check(&Tok::RBracket) {
                    loop {
                        xs.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RBracket, "']'")?;
                Ok(Expr::List(xs))
            }
            Tok::LBrace => Ok(Expr::Map(self.prop_map()?)),
            Tok::Ident(word) => {
                let upper = word.to_ascii_uppercase();
                match upper.as_str() {
                    "TRUE" => {
                        self.advance();
                        return Ok(Expr::Bool(true));
                    }
                    "FALSE" => {
                        self.advance();
                        return Ok(Expr::Bool(false));
                    }
                    "NULL" => {
                        self.advance();
                        return Ok(Expr::Null);
                    }
                    "EXISTS" => {
                        self.advance();
                        return self.exists();
                    }
                    _ => {}
                }
                if self.peek_at(1) == &Tok::LParen {
                    self.advance();
                    self.advance();
                    return self.call(word, span);
                }
                let (name, span) = self.name()?;
                Ok(Expr::Var(name, span))
            }
            _ => Err(self.error("expected expression")),
        }
    }

    fn call(&mut self, name: String, span: Span) -> Result<Expr, FrontendError> {
        if let Some(kind) = AggKind::from_name(&name) {
            let distinct = self.eat_kw("DISTINCT");
            let arg = if kind == AggKind::Count && !distinct && self.eat(&Tok::Star) {
                None
            } else {
                Some(Box::new(self.expr()?))
            };
            self.expect(&Tok::RParen, "')' to close aggregate")?;
            return Ok(Expr::Agg { kind, distinct, arg });
        }
        if is_reserved(&name) {
            return Err(syntax(span.start, span.end, "keyword used as a function name"));
        }
        let mut args = Vec::new();
        if !self.check(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen, "')' to close function call")?;
        Ok(Expr::Func(name, args))
    }

    fn exists(&mut self) -> Result<Expr, FrontendError> {
        self.expect(&Tok::LBrace, "'{' after EXISTS")?;
        let clauses = self.clauses()?;
        let ret = if self.eat_kw("RETURN") { Some(self.projection()?) } else { None };
        if clauses.is_empty() {
            return Err(self.error("EXISTS needs at least one clause"));
        }
        self.expect(&Tok::RBrace, "'}' to close EXISTS")?;
        Ok(Expr::Exists(Box::new(SubQuery { clauses, ret })))
    }
}

fn is_reserved(s: &str) -> bool {
    RESERVED.iter().any(|k| k.eq_ignore_ascii_case(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_query_shape() {
        let q = parse(
            "MATCH (reader:Person)-[:READ]->(book:Book)<-[:WRITE]-(writer) \
             WHERE reader.name = 'Alice' RETURN writer.name",
        )
        .unwrap();
        let Query::Single(s) = q else { panic!() };
        let Clause::Match(m) = &s.clauses[0] else { panic!() };
        let p = &m.patterns[0];
        assert_eq!(p.nodes().count(), 3);
        assert_eq!(p.rels().count(), 2);
        assert_eq!(p.chain[1].0.dir, Direction::Left);
        assert!(m.where_.is_some());
        assert_eq!(s.ret.items.len(), 1);
    }

    #[test]
    fn minimal_query() {
        let Query::Single(s) = parse("MATCH (n) RETURN n").unwrap() else { panic!() };
        let Clause::Match(m) = &s.clauses[0] else { panic!() };
        assert!(m.patterns[0].start.labels.is_empty());
        assert!(m.patterns[0].chain.is_empty());
    }

    #[test]
    fn ranges() {
        let r = |s: &str| {
            let q = parse(&format!("MATCH (n)-[{s}]->(m) RETURN n")).unwrap();
            let Query::Single(s) = q else { panic!() };
            let Clause::Match(m) = &s.clauses[0] else { panic!() };
            m.patterns[0].chain[0].0.range
        };
        assert_eq!(r("*1..2"), Some(Range { min: 1, max: Some(2) }));
        assert_eq!(r("*"), Some(Range { min: 1, max: None }));
        assert_eq!(r("*3"), Some(Range { min: 3, max: Some(3) }));
        assert_eq!(r("*..4"), Some(Range { min: 1, max: Some(4) }));
        assert_eq!(r("*2.."), Some(Range { min: 2, max: None }));
        assert_eq!(r(":KNOWS*"), Some(Range { min: 1, max: None }));
        assert!(parse("MATCH (n)-[*0..2]->(m) RETURN n").is_err());
        assert!(parse("MATCH (n)-[*3..2]->(m) RETURN n").is_err());
    }

    #[test]
    fn keywords_case_insensitive() {
        assert_eq!(
            parse("match (n) where n.x = 1 return distinct n").unwrap(),
            parse("MATCH (n) WHERE n.x = 1 RETURN DISTINCT n").unwrap()
        );
    }

    #[test]
    fn rejects_outside_fragment() {
        for q in [
            "CREATE (n) RETURN n",
            "MATCH (n) RETURN n.x + 1",
            "MATCH (n) RETURN n LIMIT n.x",
            "MATCH p = (n)-->(m) RETURN p",
            "MATCH (n)<-[]->(m) RETURN n",
            "MATCH (n) WHERE n.x = $p RETURN n",
            "MATCH (n) RETURN n.x = 1.5",
            "MATCH (n) RETURN n UNION",
        ] {
            let e = parse(q).unwrap_err();
            assert_eq!(e.kind, super::super::ErrorKind::Syntax, "{q}");
        }
    }

    #[test]
    fn error_location_points_at_violation() {
        let e = parse("MATCH (n) RETURN n LIMIT x").unwrap_err();
        assert_eq!(e.span.start, 25);
    }

    #[test]
    fn negative_literals_fold() {
        let Query::Single(s) = parse("RETURN -5, -(5), -9223372036854775808").unwrap() else { panic!() };
        assert_eq!(s.ret.items[0].expr, Expr::Int(-5));
        assert_eq!(s.ret.items[1].expr, Expr::Neg(Box::new(Expr::Int(5))));
        assert_eq!(s.ret.items[2].expr, Expr::Int(i64::MIN));
    }

    #[test]
    fn short_arrows_and_label_alternatives() {
        let Query::Single(s) = parse("MATCH (a)-->(b)<--(c)--(d)-[r:A|B]->(e) RETURN a").unwrap() else { panic!() };
        let Clause::Match(m) = &s.clauses[0] else { panic!() };
        let dirs: Vec<_> = m.patterns[0].rels().map(|r| r.dir).collect();
        assert_eq!(dirs, [Direction::Right, Direction::Left, Direction::Both, Direction::Right]);
        assert_eq!(m.patterns[0].chain[3].0.labels, ["A", "B"]);
    }

    #[test]
    fn exists_subquery() {
        let q = parse("MATCH (n) WHERE EXISTS { MATCH (n)-->(m) WHERE m.x > 1 } RETURN n");
        assert!(q.is_ok());
    }
}
