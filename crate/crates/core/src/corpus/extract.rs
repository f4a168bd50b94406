//! Lightweight method extractor for Java-like sources.
//!
//! The extractor lexes the file, matches braces, and treats a `{` as a method
//! body when it directly follows `name(params) [throws ...]` inside a type
//! body (or at file level). Calls are identified lexically as an identifier
//! followed by an argument list.

use std::collections::{BTreeMap, BTreeSet};

use super::tokenize::tokenize;
use super::{MethodRecord, SourceFile};
use crate::error::{Error, Result};

const CONTROL_KEYWORDS: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "synchronized",
    "try",
    "else",
    "do",
    "return",
    "new",
    "throw",
    "assert",
    "case",
    "this",
    "super",
];

const TYPE_KEYWORDS: &[&str] = &["class", "interface", "enum", "record"];

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Ident,
    Punct(char),
    Comment,
    Literal,
}

#[derive(Debug, Clone)]
struct Lexeme<'a> {
    kind: Kind,
    text: &'a str,
    offset: usize,
}

impl Lexeme<'_> {
    fn is(&self, c: char) -> bool {
        self.kind == Kind::Punct(c)
    }

    fn is_ident(&self, word: &str) -> bool {
        self.kind == Kind::Ident && self.text == word
    }
}

fn malformed(file: &SourceFile, offset: usize, reason: &'static str) -> Error {
    Error::MalformedSource {
        path: file.path.clone(),
        offset,
        reason,
    }
}

fn lex(file: &SourceFile) -> Result<Vec<Lexeme<'_>>> {
    let src = file.content.as_str();
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        if b.is_ascii_whitespace() {
            i += 1;
        } else if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            out.push(Lexeme {
                kind: Kind::Comment,
                text: &src[start..i],
                offset: start,
            });
        } else if src[i..].starts_with("/*") {
            let end = src[i + 2..]
                .find("*/")
                .ok_or_else(|| malformed(file, start, "unterminated block comment"))?;
            i = i + 2 + end + 2;
            out.push(Lexeme {
                kind: Kind::Comment,
                text: &src[start..i],
                offset: start,
            });
        } else if src[i..].starts_with("\"\"\"") {
            let end = src[i + 3..]
                .find("\"\"\"")
                .ok_or_else(|| malformed(file, start, "unterminated text block"))?;
            i = i + 3 + end + 3;
            out.push(Lexeme {
                kind: Kind::Literal,
                text: &src[start + 3..i - 3],
                offset: start,
            });
        } else if b == b'"' || b == b'\'' {
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => {
                        return Err(malformed(file, start, "unterminated literal"));
                    }
                    Some(b'\\') => i += 2,
                    Some(&c) if c == b => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            out.push(Lexeme {
                kind: Kind::Literal,
                text: &src[start + 1..i - 1],
                offset: start,
            });
        } else if b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b >= 0x80 {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric()
                    || bytes[i] == b'_'
                    || bytes[i] == b'$'
                    || bytes[i] >= 0x80)
            {
                i += 1;
            }
            out.push(Lexeme {
                kind: Kind::Ident,
                text: &src[start..i],
                offset: start,
            });
        } else {
            i += 1;
            out.push(Lexeme {
                kind: Kind::Punct(b as char),
                text: &src[start..i],
                offset: start,
            });
        }
    }
    Ok(out)
}

/// Index of the matching `}` for every `{`, erroring on imbalance.
fn match_braces(file: &SourceFile, lexemes: &[Lexeme<'_>]) -> Result<BTreeMap<usize, usize>> {
    let mut stack = Vec::new();
    let mut pairs = BTreeMap::new();
    for (i, lx) in lexemes.iter().enumerate() {
        if lx.is('{') {
            stack.push(i);
        } else if lx.is('}') {
            let open = stack
                .pop()
                .ok_or_else(|| malformed(file, lx.offset, "unmatched closing brace"))?;
            pairs.insert(open, i);
        }
    }
    if let Some(&open) = stack.last() {
        return Err(malformed(file, lexemes[open].offset, "unclosed brace"));
    }
    Ok(pairs)
}

struct Signature {
    name: String,
    param_types: Vec<String>,
    /// Index of the first code lexeme of the declaration.
    start: usize,
}

/// Recognizes `... name ( params ) [throws A, B]` ending right before `body`.
fn method_signature(code: &[(usize, &Lexeme<'_>)], header_start: usize) -> Option<Signature> {
    let mut end = code.len();
    // strip a trailing throws clause
    if let Some(pos) = code.iter().rposition(|(_, l)| l.is_ident("throws")) {
        let clause_ok = code[pos + 1..]
            .iter()
            .all(|(_, l)| l.kind == Kind::Ident || l.is('.') || l.is(',') || l.is('<') || l.is('>'));
        if clause_ok && pos > 0 {
            end = pos;
        }
    }
    if end < 3 || !code[end - 1].1.is(')') {
        return None;
    }
    let mut depth = 0usize;
    let mut open = None;
    for k in (0..end).rev() {
        let l = code[k].1;
        if l.is(')') {
            depth += 1;
        } else if l.is('(') {
            depth -= 1;
            if depth == 0 {
                open = Some(k);
                break;
            }
        }
    }
    let open = open?;
    if open == 0 {
        return None;
    }
    let name_lx = code[open - 1].1;
    if name_lx.kind != Kind::Ident || CONTROL_KEYWORDS.contains(&name_lx.text) {
        return None;
    }
    let before = &code[..open - 1];
    if top_level(before).any(|l| l.is('=') || l.is_ident("new")) || is_type_declaration(before) {
        return None;
    }
    let param_types = param_types(&code[open + 1..end - 1]);
    let start = code.first().map_or(header_start, |(i, _)| *i);
    Some(Signature {
        name: name_lx.text.to_string(),
        param_types,
        start,
    })
}

/// Lexemes outside any parentheses, e.g. skipping annotation arguments.
fn top_level<'b, 'a: 'b>(code: &'b [(usize, &'b Lexeme<'a>)]) -> impl Iterator<Item = &'b Lexeme<'a>> + 'b {
    let mut depth = 0i32;
    code.iter().filter_map(move |(_, l)| {
        if l.is('(') {
            depth += 1;
        } else if l.is(')') {
            depth -= 1;
            return None;
        }
        (depth == 0).then_some(*l)
    })
}

/// A type keyword before any parenthesis or initializer.
fn is_type_declaration(code: &[(usize, &Lexeme<'_>)]) -> bool {
    for (_, l) in code {
        if l.is('(') || l.is('=') {
            return false;
        }
        if l.kind == Kind::Ident && TYPE_KEYWORDS.contains(&l.text) {
            return true;
        }
    }
    false
}

fn param_types(params: &[(usize, &Lexeme<'_>)]) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&Lexeme<'_>> = Vec::new();
    let mut depth = 0i32;
    let mut flush = |current: &mut Vec<&Lexeme<'_>>| {
        if current.is_empty() {
            return;
        }
        // drop annotations and modifiers
        let mut kept: Vec<&Lexeme<'_>> = Vec::new();
        let mut k = 0;
        while k < current.len() {
            if current[k].is('@') {
                k += 2;
                continue;
            }
            if !current[k].is_ident("final") {
                kept.push(current[k]);
            }
            k += 1;
        }
        // the last identifier is the parameter name
        if let Some(pos) = kept.iter().rposition(|l| l.kind == Kind::Ident) {
            if kept.len() > 1 {
                kept.remove(pos);
            }
        }
        out.push(kept.iter().map(|l| l.text).collect::<String>());
        current.clear();
    };
    for (_, l) in params {
        if l.is('<') || l.is('(') {
            depth += 1;
        } else if l.is('>') || l.is(')') {
            depth -= 1;
        }
        if l.is(',') && depth == 0 {
            flush(&mut current);
        } else {
            current.push(l);
        }
    }
    flush(&mut current);
    out
}

fn type_name(code: &[(usize, &Lexeme<'_>)]) -> Option<String> {
    let pos = code
        .iter()
        .position(|(_, l)| l.kind == Kind::Ident && TYPE_KEYWORDS.contains(&l.text))?;
    code.get(pos + 1)
        .filter(|(_, l)| l.kind == Kind::Ident)
        .map(|(_, l)| l.text.to_string())
}

fn comment_text(raw: &str) -> &str {
    let raw = raw.strip_prefix("//").unwrap_or(raw);
    let raw = raw.strip_prefix("/**").or_else(|| raw.strip_prefix("/*")).unwrap_or(raw);
    raw.strip_suffix("*/").unwrap_or(raw)
}

/// Statements at the top level of a body: `;` terminators and closed blocks
/// that are not continued by `else`/`catch`/`finally`/`while`.
fn count_statements(body: &[&Lexeme<'_>]) -> u32 {
    let mut braces = 0i32;
    let mut parens = 0i32;
    let mut count = 0;
    for (k, l) in body.iter().enumerate() {
        match l.kind {
            Kind::Punct('(') => parens += 1,
            Kind::Punct(')') => parens -= 1,
            Kind::Punct('{') => braces += 1,
            Kind::Punct('}') => {
                braces -= 1;
                if braces == 0 && parens == 0 {
                    let continued = body.get(k + 1).is_some_and(|n| {
                        n.is(';')
                            || n.is(')')
                            || n.is(',')
                            || ["else", "catch", "finally", "while"]
                                .iter()
                                .any(|w| n.is_ident(w))
                    });
                    if !continued {
                        count += 1;
                    }
                }
            }
            Kind::Punct(';') if braces == 0 && parens == 0 => count += 1,
            _ => {}
        }
    }
    count
}

fn api_calls(body: &[&Lexeme<'_>]) -> Vec<String> {
    body.windows(2)
        .filter(|w| {
            w[0].kind == Kind::Ident
                && w[1].is('(')
                && !CONTROL_KEYWORDS.contains(&w[0].text)
                && !w[0].text.starts_with(|c: char| c.is_ascii_digit())
        })
        .map(|w| w[0].text.to_string())
        .collect()
}

fn code_tokens(lexemes: &[&Lexeme<'_>]) -> Vec<String> {
    lexemes
        .iter()
        .filter(|l| matches!(l.kind, Kind::Ident | Kind::Literal))
        .flat_map(|l| tokenize(l.text))
        .collect()
}

/// Extracts every method with a body from `file`. Callees are resolved
/// against the other methods of the same file.
pub fn extract_methods(file: &SourceFile) -> Result<Vec<MethodRecord>> {
    let lexemes = lex(file)?;
    let pairs = match_braces(file, &lexemes)?;
    let mut methods = Vec::new();
    // enclosing type names with the index of their closing brace
    let mut scopes: Vec<(Option<String>, usize)> = vec![(None, usize::MAX)];
    let mut header_start = 0;
    let mut i = 0;
    while i < lexemes.len() {
        while scopes.len() > 1 && scopes.last().is_some_and(|(_, close)| *close == i) {
            scopes.pop();
            header_start = i + 1;
        }
        let lx = &lexemes[i];
        if lx.is(';') || lx.is('}') {
            header_start = i + 1;
            i += 1;
            continue;
        }
        if !lx.is('{') {
            i += 1;
            continue;
        }
        let close = pairs[&i];
        let header: Vec<(usize, &Lexeme<'_>)> = (header_start..i)
            .map(|k| (k, &lexemes[k]))
            .collect();
        let code: Vec<(usize, &Lexeme<'_>)> = header
            .iter()
            .copied()
            .filter(|(_, l)| l.kind != Kind::Comment)
            .collect();

        if is_type_declaration(&code) {
            scopes.push((type_name(&code), close));
            header_start = i + 1;
            i += 1;
            continue;
        }

        if let Some(sig) = method_signature(&code, header_start) {
            let comment: Vec<String> = header
                .iter()
                .take_while(|(k, _)| *k < sig.start)
                .filter(|(_, l)| l.kind == Kind::Comment)
                .flat_map(|(_, l)| tokenize(comment_text(l.text)))
                .collect();
            let declaration: Vec<&Lexeme<'_>> = (sig.start..i).map(|k| &lexemes[k]).collect();
            let body: Vec<&Lexeme<'_>> = lexemes[i + 1..close]
                .iter()
                .filter(|l| l.kind != Kind::Comment)
                .collect();
            let qualifier: Vec<&str> = scopes
                .iter()
                .filter_map(|(name, _)| name.as_deref())
                .collect();
            let qualified = if qualifier.is_empty() {
                sig.name.clone()
            } else {
                format!("{}.{}", qualifier.join("."), sig.name)
            };
            let id = format!("{}::{}({})", file.path, qualified, sig.param_types.join(","));
            let mut tokens = code_tokens(
                &declaration
                    .into_iter()
                    .filter(|l| l.kind != Kind::Comment)
                    .collect::<Vec<_>>(),
            );
            tokens.extend(code_tokens(&body));
            methods.push(MethodRecord {
                id,
                file: file.path.clone(),
                revision: file.revision,
                name: sig.name,
                tokens,
                api_calls: api_calls(&body),
                comment,
                callees: BTreeSet::new(),
                statement_count: count_statements(&body),
            });
        }
        // method bodies and other blocks are skipped whole
        i = close + 1;
        header_start = i;
    }
    disambiguate(&mut methods);
    resolve_callees(&mut methods);
    Ok(methods)
}

fn disambiguate(methods: &mut [MethodRecord]) {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for m in methods.iter_mut() {
        let n = seen.entry(m.id.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            m.id = format!("{}#{}", m.id, n);
        }
    }
}

/// Resolves each method's `api_calls` to ids of methods in `methods` with a
/// matching simple name. Calls that match nothing are external and ignored.
pub fn resolve_callees(methods: &mut [MethodRecord]) {
    let mut by_name: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for m in methods.iter() {
        by_name.entry(m.name.clone()).or_default().push(m.id.clone());
    }
    for m in methods.iter_mut() {
        let mut callees = BTreeSet::new();
        for call in &m.api_calls {
            if let Some(ids) = by_name.get(call) {
                callees.extend(ids.iter().filter(|id| **id != m.id).cloned());
            }
        }
        m.callees = callees;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(content: &str) -> SourceFile {
        SourceFile {
            path: "src/F.java".into(),
            revision: 3,
            content: content.into(),
            deleted: false,
        }
    }

    #[test]
    fn single_method_with_comment() {
        let methods = extract_methods(&file("/* sums */ int f(){return g(x);}")).unwrap();
        assert_eq!(methods.len(), 1);
        let m = &methods[0];
        assert_eq!(m.api_calls, ["g"]);
        assert_eq!(m.comment, ["sums"]);
        assert_eq!(m.statement_count, 1);
        assert_eq!(m.id, "src/F.java::f()");
        assert_eq!(m.revision, 3);
    }

    #[test]
    fn empty_file() {
        assert!(extract_methods(&file("")).unwrap().is_empty());
    }

    #[test]
    fn second_method_calls_first() {
        let src = "class A {\n  int first(int a) { return a; }\n  int second() { return first(2); }\n}";
        let methods = extract_methods(&file(src)).unwrap();
        assert_eq!(methods.len(), 2);
        assert_eq!(methods[0].id, "src/F.java::A.first(int)");
        assert!(methods[1].callees.contains(&methods[0].id));
        assert!(methods[0].callees.is_empty());
    }

    #[test]
    fn unbalanced_braces_report_offset() {
        let err = extract_methods(&file("class A { void f() { }")).unwrap_err();
        match err {
            Error::MalformedSource { path, offset, .. } => {
                assert_eq!(path, "src/F.java");
                assert_eq!(offset, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = extract_methods(&file("void f() { } }")).unwrap_err();
        assert!(matches!(err, Error::MalformedSource { offset: 13, .. }));
    }

    #[test]
    fn java_class_with_javadoc_annotations_and_generics() {
        let src = r#"
package org.example;

import java.util.List;

/** Holds names. */
public class Registry<T> extends Base implements Api {
    private final List<String> names = new ArrayList<>();
    static { init(); }

    /**
     * Looks up a name by index.
     */
    @Override
    public String getName(final int index, Map<String, List<T>> cache) throws IOException, ParseException {
        if (index < 0) {
            throw new IllegalArgumentException("negative index");
        } else {
            log("ok");
        }
        for (int i = 0; i < 3; i++) { touch(i); }
        return names.get(index);
    }

    // trailing
    abstract void noBody();

    void lambdas() {
        run(() -> { a(); b(); });
        String s = "{ not a brace";
    }

    static class Inner {
        void deep() { Runnable r = new Runnable() { public void run() { x(); } }; }
    }
}
"#;
        let methods = extract_methods(&file(src)).unwrap();
        let ids: Vec<&str> = methods.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "src/F.java::Registry.getName(int,Map<String,List<T>>)",
                "src/F.java::Registry.lambdas()",
                "src/F.java::Registry.Inner.deep()",
            ]
        );
        let get = &methods[0];
        assert_eq!(get.comment, ["looks", "up", "name", "by", "index"]);
        assert_eq!(get.statement_count, 3);
        assert_eq!(get.api_calls, ["IllegalArgumentException", "log", "touch", "get"]);
        assert!(get.tokens.contains(&"getname".to_string()));
        assert!(get.tokens.contains(&"negative".to_string()));
        let lambdas = &methods[1];
        assert_eq!(lambdas.statement_count, 2);
        assert_eq!(lambdas.api_calls, ["run", "a", "b"]);
        assert_eq!(methods[2].statement_count, 1);
    }

    #[test]
    fn extraction_is_deterministic() {
        let src = "class A { void f() { g(); } void g() { f(); } }";
        assert_eq!(
            extract_methods(&file(src)).unwrap(),
            extract_methods(&file(src)).unwrap()
        );
    }

    #[test]
    fn qualified_return_types_and_annotation_arguments() {
        let src = "class A { @Ann(key = 1) java.util.List<String> names(Record record) { return of(record); } }";
        let m = extract_methods(&file(src)).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].id, "src/F.java::A.names(Record)");
    }

    #[test]
    fn do_while_and_try_blocks() {
        let src = "void f() { do { a(); } while (x); try { b(); } catch (E e) { c(); } finally { d(); } int[] v = {1, 2}; }";
        let m = &extract_methods(&file(src)).unwrap()[0];
        assert_eq!(m.statement_count, 3);
    }
}
