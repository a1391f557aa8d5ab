//! Tokens, the extra-token registry and the unigram subword segmenter.
//!
//! Base tokens are pieces of an existing subword vocabulary; extra tokens are
//! newly created out-of-vocabulary tokens rendered as `<label>` and never
//! segmented. A base piece may not start with `<`, which keeps rendered ID
//! maps unambiguous.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::{Error, Result};

pub type TokenId = u32;

/// Word-boundary marker used in place of spaces, as SentencePiece does.
pub const WORD_BOUNDARY: char = '\u{2581}';

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Base(String),
    Extra(String),
}

impl TokenKind {
    /// Inverse of [`Token::render`].
    pub fn parse_rendered(text: &str) -> Result<TokenKind> {
        if text.is_empty() {
            return Err(Error::InvalidArgument("empty token".into()));
        }
        if let Some(inner) = text.strip_prefix('<') {
            match inner.strip_suffix('>') {
                Some(label) if !label.is_empty() => Ok(TokenKind::Extra(label.to_string())),
                _ => Err(Error::InvalidArgument(format!(
                    "{text:?} starts with '<' but is not a rendered extra token"
                ))),
            }
        } else {
            Ok(TokenKind::Base(text.to_string()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub id: TokenId,
    pub kind: TokenKind,
}

impl Token {
    pub fn is_extra(&self) -> bool {
        matches!(self.kind, TokenKind::Extra(_))
    }

    /// Piece text or extra label, without brackets.
    pub fn text(&self) -> &str {
        match &self.kind {
            TokenKind::Base(s) | TokenKind::Extra(s) => s,
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TokenKind::Base(p) => f.write_str(p),
            TokenKind::Extra(l) => write!(f, "<{l}>"),
        }
    }
}

/// Render a token sequence as space-separated text.
pub fn render_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::render)
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_base_piece(piece: &str) -> Result<()> {
    if piece.is_empty() {
        return Err(Error::InvalidArgument("empty base piece".into()));
    }
    if piece.starts_with('<') {
        return Err(Error::InvalidArgument(format!(
            "base piece {piece:?} may not start with '<'"
        )));
    }
    if piece.chars().any(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!(
            "base piece {piece:?} contains whitespace"
        )));
    }
    Ok(())
}

/// Base pieces and registered extra tokens, with globally unique dense ids.
#[derive(Clone, Debug, Default)]
pub struct TokenRegistry {
    base: HashMap<String, TokenId>,
    extras: HashMap<String, TokenId>,
    tokens: Vec<TokenKind>,
}

impl TokenRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry whose base ids equal the model's piece ids.
    pub fn from_model(model: &SegmenterModel) -> Self {
        let mut reg = Self::new();
        for (piece, _) in &model.pieces {
            reg.base.insert(piece.clone(), reg.tokens.len() as TokenId);
            reg.tokens.push(TokenKind::Base(piece.clone()));
        }
        reg
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Register (or look up) the extra token `<label>`.
    pub fn register_extra(&mut self, label: &str) -> Result<Token> {
        if label.is_empty() {
            return Err(Error::InvalidArgument("extra token label is empty".into()));
        }
        let next = self.tokens.len() as TokenId;
        let id = *self.extras.entry(label.to_string()).or_insert(next);
        if id == next {
            self.tokens.push(TokenKind::Extra(label.to_string()));
        }
        Ok(Token {
            id,
            kind: TokenKind::Extra(label.to_string()),
        })
    }

    /// Register (or look up) a base piece outside of any segmenter model.
    pub fn intern_base(&mut self, piece: &str) -> Result<Token> {
        check_base_piece(piece)?;
        let next = self.tokens.len() as TokenId;
        let id = *self.base.entry(piece.to_string()).or_insert(next);
        if id == next {
            self.tokens.push(TokenKind::Base(piece.to_string()));
        }
        Ok(Token {
            id,
            kind: TokenKind::Base(piece.to_string()),
        })
    }

    pub fn intern(&mut self, kind: &TokenKind) -> Result<Token> {
        match kind {
            TokenKind::Base(p) => self.intern_base(p),
            TokenKind::Extra(l) => self.register_extra(l),
        }
    }

    pub fn get(&self, id: TokenId) -> Option<Token> {
        self.tokens.get(id as usize).map(|kind| Token {
            id,
            kind: kind.clone(),
        })
    }

    pub fn extra(&self, label: &str) -> Option<Token> {
        self.extras.get(label).and_then(|&id| self.get(id))
    }

    /// Extra tokens in registration order.
    pub fn extras(&self) -> impl Iterator<Item = Token> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, k)| matches!(k, TokenKind::Extra(_)))
            .map(|(id, k)| Token {
                id: id as TokenId,
                kind: k.clone(),
            })
    }
}

/// Unigram piece table: piece → log-probability.
#[derive(Clone, Debug, Default)]
pub struct SegmenterModel {
    pieces: Vec<(String, f64)>,
    index: HashMap<String, usize>,
    max_piece_chars: usize,
}

impl SegmenterModel {
    /// Build from `(piece, score)` pairs. A repeated piece keeps its first id
    /// and takes the last score.
    pub fn from_pieces<I, S>(pieces: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut model = SegmenterModel::default();
        for (piece, score) in pieces {
            model.insert(piece.as_ref(), score)?;
        }
        Ok(model)
    }

    fn insert(&mut self, piece: &str, score: f64) -> Result<bool> {
        check_base_piece(piece)?;
        if !score.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "score for {piece:?} is not finite"
            )));
        }
        if let Some(&i) = self.index.get(piece) {
            self.pieces[i].1 = score;
            return Ok(false);
        }
        self.index.insert(piece.to_string(), self.pieces.len());
        self.pieces.push((piece.to_string(), score));
        self.max_piece_chars = self.max_piece_chars.max(piece.chars().count());
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn score(&self, piece: &str) -> Option<f64> {
        self.index.get(piece).map(|&i| self.pieces[i].1)
    }

    fn token(&self, idx: usize) -> Token {
        Token {
            id: idx as TokenId,
            kind: TokenKind::Base(self.pieces[idx].0.clone()),
        }
    }

    /// Sum of piece scores, accumulated left to right.
    pub fn score_of(&self, tokens: &[Token]) -> Option<f64> {
        tokens
            .iter()
            .try_fold(0.0, |acc, t| self.score(t.text()).map(|s| acc + s))
    }

    /// Candidate pieces starting at char position `i`, as (char length, piece index).
    fn pieces_at<'a>(
        &'a self,
        text: &'a str,
        bounds: &'a [usize],
        i: usize,
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        let n = bounds.len() - 1;
        let longest = self.max_piece_chars.min(n - i);
        (1..=longest)
            .rev()
            .filter_map(move |l| self.index.get(&text[bounds[i]..bounds[i + l]]).map(|&p| (l, p)))
    }

    /// Maximum-score segmentation (Viterbi over the piece lattice).
    ///
    /// Among equal-score segmentations, the one whose first differing piece
    /// is longer wins.
    pub fn segment(&self, text: &str) -> Result<Vec<Token>> {
        let bounds = char_bounds(text)?;
        let n = bounds.len() - 1;
        // best[i]: best score of text[i..]; the choice at i is the longest
        // piece reaching it, so ties resolve toward longer leading pieces.
        let mut best: Vec<Option<f64>> = vec![None; n + 1];
        let mut choice = vec![(0usize, 0usize); n + 1];
        best[n] = Some(0.0);
        for i in (0..n).rev() {
            for (l, p) in self.pieces_at(text, &bounds, i) {
                if let Some(rest) = best[i + l] {
                    let s = self.pieces[p].1 + rest;
                    if best[i].is_none_or(|b| s > b) {
                        best[i] = Some(s);
                        choice[i] = (l, p);
                    }
                }
            }
        }
        if best[0].is_none() {
            return Err(Error::Coverage {
                position: self.stuck_position(text, &bounds),
            });
        }
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let (l, p) = choice[i];
            out.push(self.token(p));
            i += l;
        }
        Ok(out)
    }

    /// Furthest position reachable from the start that cannot be completed.
    fn stuck_position(&self, text: &str, bounds: &[usize]) -> usize {
        let n = bounds.len() - 1;
        let mut reachable = vec![false; n + 1];
        reachable[0] = true;
        for i in 0..n {
            if reachable[i] {
                for (l, _) in self.pieces_at(text, bounds, i) {
                    reachable[i + l] = true;
                }
            }
        }
        (0..n).rev().find(|&i| reachable[i]).unwrap_or(0)
    }

    /// Repeated longest-prefix match, ignoring scores.
    pub fn segment_greedy(&self, text: &str) -> Result<Vec<Token>> {
        let bounds = char_bounds(text)?;
        let n = bounds.len() - 1;
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let (l, p) = self
                .pieces_at(text, &bounds, i)
                .next()
                .ok_or(Error::Coverage { position: i })?;
            out.push(self.token(p));
            i += l;
        }
        Ok(out)
    }
}

fn char_bounds(text: &str) -> Result<Vec<usize>> {
    if text.is_empty() {
        return Err(Error::InvalidArgument("cannot segment an empty string".into()));
    }
    let mut b: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    b.push(text.len());
    Ok(b)
}

/// Load a `piece<TAB>score` table.
///
/// Pieces that start with `<` (control symbols such as `<pad>`) or contain
/// whitespace are skipped with a warning. A repeated piece takes its last score.
pub fn load_unigram_model(path: impl AsRef<Path>) -> Result<SegmenterModel> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut model = SegmenterModel::default();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        let (piece, score) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(path, n + 1, "expected piece<TAB>score"))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n + 1, format!("score {score:?} is not a number")))?;
        if !score.is_finite() {
            return Err(Error::parse(path, n + 1, "score is not finite"));
        }
        if let Err(e) = check_base_piece(piece) {
            log::warn!("{}:{}: skipping piece: {e}", path.display(), n + 1);
            continue;
        }
        if !model.insert(piece, score)? {
            log::warn!(
                "{}:{}: duplicate piece {piece:?}, keeping the last score",
                path.display(),
                n + 1
            );
        }
    }
    Ok(model)
}

/// Replace spaces with [`WORD_BOUNDARY`].
pub fn escape_whitespace(text: &str) -> String {
    text.replace(' ', &WORD_BOUNDARY.to_string())
}

/// Piece text with word-boundary markers removed, for display.
pub fn display_piece(piece: &str) -> String {
    piece.replace(WORD_BOUNDARY, "")
}
