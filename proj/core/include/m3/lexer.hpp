#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m3 {

enum class Tok : uint8_t {
    Ident,
    Number,
    // keywords
    KwInterface,
    KwModule,
    KwGeneric,
    KwImport,
    KwConst,
    KwType,
    KwReveal,
    KwProcedure,
    KwVar,
    KwBegin,
    KwEnd,
    KwReturn,
    KwObject,
    KwRecord,
    KwAny,
    KwInteger,
    // punctuation
    Semi,
    Comma,
    Dot,
    Colon,
    LParen,
    RParen,
    Eq,
    Plus,
    Minus,
    Star,
    Subtype, // <:
    Assign,  // :=
    LBracket,
    RBracket,
    Eof,
};

struct Token {
    Tok kind;
    std::string text;
    int line;
    int col;
};

const char* tok_name(Tok t);

// Tokenizes a whole source unit. Comments (* ... *) nest and may span lines.
// Unterminated comments and stray characters raise SyntaxError at the
// offending position.
std::vector<Token> lex(const std::string& source);

} // namespace m3
