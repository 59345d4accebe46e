//! Tokenizer for the controlled insight language.

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    /// Lower-cased word (letters, digits, `_`, `-`, inner `.`).
    Word(String),
    /// Numeric literal. `percent` literals are already divided by 100.
    Number { value: f64, percent: bool },
    /// Double-quoted literal with `\"` and `\\` escapes resolved.
    Quoted(String),
    /// Comparison symbol or punctuation: `< <= > >= = ≤ ≥ ≈ ,`
    Sym(&'static str),
}

impl Token {
    /// Text used when matching multi-token phrases and vocabulary entries.
    pub fn surface(&self) -> Option<&str> {
        match self {
            Token::Word(w) => Some(w),
            Token::Sym(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError(pub String);

fn is_run_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '%')
}

/// Splits `text` into tokens. One trailing sentence terminator is ignored.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let trimmed = text.trim();
    let trimmed = trimmed
        .strip_suffix(['.', '!'])
        .map(str::trim_end)
        .unwrap_or(trimmed);
    let chars: Vec<char> = trimmed.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '"' | '\u{201c}' | '\u{201d}' => {
                let mut literal = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(LexError("unterminated quoted name".into())),
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e @ ('"' | '\\')) => literal.push(e),
                                _ => return Err(LexError("bad escape in quoted name".into())),
                            }
                            i += 2;
                        }
                        Some('"' | '\u{201c}' | '\u{201d}') => {
                            i += 1;
                            break;
                        }
                        Some(&other) => {
                            literal.push(other);
                            i += 1;
                        }
                    }
                }
                tokens.push(Token::Quoted(literal));
            }
            '<' | '>' => {
                let with_eq = chars.get(i + 1) == Some(&'=');
                tokens.push(Token::Sym(match (c, with_eq) {
                    ('<', false) => "<",
                    ('<', true) => "<=",
                    ('>', false) => ">",
                    _ => ">=",
                }));
                i += if with_eq { 2 } else { 1 };
            }
            '=' => {
                tokens.push(Token::Sym("="));
                i += 1;
            }
            '≤' => {
                tokens.push(Token::Sym("<="));
                i += 1;
            }
            '≥' => {
                tokens.push(Token::Sym(">="));
                i += 1;
            }
            '≈' => {
                tokens.push(Token::Sym("≈"));
                i += 1;
            }
            ',' => {
                tokens.push(Token::Sym(","));
                i += 1;
            }
            c if is_run_char(c) => {
                let start = i;
                while i < chars.len() && is_run_char(chars[i]) {
                    i += 1;
                }
                let run: String = chars[start..i].iter().collect();
                tokens.push(classify_run(&run)?);
            }
            other => return Err(LexError(format!("unexpected character `{other}`"))),
        }
    }
    Ok(tokens)
}

fn classify_run(run: &str) -> Result<Token, LexError> {
    let (digits, percent) = match run.strip_suffix('%') {
        Some(d) => (d, true),
        None => (run, false),
    };
    if is_decimal(digits) {
        let text = if percent { shift_decimal(digits, -2) } else { digits.to_string() };
        let value: f64 = text.parse().map_err(|_| LexError(format!("bad number `{run}`")))?;
        if !value.is_finite() {
            return Err(LexError(format!("number `{run}` out of range")));
        }
        return Ok(Token::Number { value, percent });
    }
    if run.contains('%') || run.ends_with('.') || run.starts_with('.') {
        return Err(LexError(format!("cannot read `{run}`")));
    }
    Ok(Token::Word(run.to_lowercase()))
}

/// `-?digits[.digits]` or `-?.digits`
fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |t: &str| t.chars().all(|c| c.is_ascii_digit());
    match frac {
        None => !int.is_empty() && digits(int),
        Some(f) => digits(int) && digits(f) && !(int.is_empty() && f.is_empty()),
    }
}

/// Moves the decimal point of a plain decimal string by `places` (positive =
/// right). Exact: operates on digits, never on binary floats.
pub fn shift_decimal(s: &str, places: i32) -> String {
    let (negative, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let mut digits: String = format!("{int}{frac}");
    let mut point = int.len() as i32 + places;
    if point < 0 {
        digits = format!("{}{digits}", "0".repeat((-point) as usize));
        point = 0;
    }
    while digits.len() < point as usize {
        digits.push('0');
    }
    let (int, frac) = digits.split_at(point as usize);
    let int = int.trim_start_matches('0');
    let frac = frac.trim_end_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    let sign = if negative && (int != "0" || !frac.is_empty()) { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Shortest decimal text that parses back to exactly `x`.
pub fn format_number(x: f64) -> String {
    let text = format!("{x}");
    if text == "-0" {
        "0".into()
    } else {
        text
    }
}

/// `x` written as a percentage (`0.65` → `65%`) without rounding error.
pub fn format_percent(x: f64) -> String {
    format!("{}%", shift_decimal(&format_number(x), 2))
}
