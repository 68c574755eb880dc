#include "m3/lexer.hpp"

#include <cctype>
#include <map>

#include "m3/error.hpp"

namespace m3 {

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::Number: return "number";
        case Tok::KwInterface: return "INTERFACE";
        case Tok::KwModule: return "MODULE";
        case Tok::KwGeneric: return "GENERIC";
        case Tok::KwImport: return "IMPORT";
        case Tok::KwConst: return "CONST";
        case Tok::KwType: return "TYPE";
        case Tok::KwReveal: return "REVEAL";
        case Tok::KwProcedure: return "PROCEDURE";
        case Tok::KwVar: return "VAR";
        case Tok::KwBegin: return "BEGIN";
        case Tok::KwEnd: return "END";
        case Tok::KwReturn: return "RETURN";
        case Tok::KwObject: return "OBJECT";
        case Tok::KwRecord: return "RECORD";
        case Tok::KwAny: return "ANY";
        case Tok::KwInteger: return "INTEGER";
        case Tok::Semi: return "';'";
        case Tok::Comma: return "','";
        case Tok::Dot: return "'.'";
        case Tok::Colon: return "':'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Eq: return "'='";
        case Tok::Plus: return "'+'";
        case Tok::Minus: return "'-'";
        case Tok::Star: return "'*'";
        case Tok::Subtype: return "'<:'";
        case Tok::Assign: return "':='";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Eof: return "end of file";
    }
    return "?";
}

namespace {

const std::map<std::string, Tok>& keywords() {
    static const std::map<std::string, Tok> kws = {
        {"INTERFACE", Tok::KwInterface}, {"MODULE", Tok::KwModule},
        {"GENERIC", Tok::KwGeneric},     {"IMPORT", Tok::KwImport},
        {"CONST", Tok::KwConst},         {"TYPE", Tok::KwType},
        {"REVEAL", Tok::KwReveal},       {"PROCEDURE", Tok::KwProcedure},
        {"VAR", Tok::KwVar},             {"BEGIN", Tok::KwBegin},
        {"END", Tok::KwEnd},             {"RETURN", Tok::KwReturn},
        {"OBJECT", Tok::KwObject},       {"RECORD", Tok::KwRecord},
        {"ANY", Tok::KwAny},             {"INTEGER", Tok::KwInteger},
    };
    return kws;
}

} // namespace

std::vector<Token> lex(const std::string& source) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;

    auto advance = [&]() {
        if (source[i] == '\n') {
            line++;
            col = 1;
        } else {
            col++;
        }
        i++;
    };

    while (i < source.size()) {
        char c = source[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance();
            continue;
        }
        // Nested comments.
        if (c == '(' && i + 1 < source.size() && source[i + 1] == '*') {
            int start_line = line, start_col = col;
            advance();
            advance();
            int depth = 1;
            while (depth > 0) {
                if (i >= source.size())
                    throw Error::at(Err::SyntaxError, start_line, start_col, "unterminated comment");
                if (source[i] == '(' && i + 1 < source.size() && source[i + 1] == '*') {
                    depth++;
                    advance();
                    advance();
                } else if (source[i] == '*' && i + 1 < source.size() && source[i + 1] == ')') {
                    depth--;
                    advance();
                    advance();
                } else {
                    advance();
                }
            }
            continue;
        }

        int tl = line, tc = col;
        auto emit = [&](Tok k, std::string text) {
            out.push_back(Token{k, std::move(text), tl, tc});
        };

        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string text;
            while (i < source.size() &&
                   (std::isalnum(static_cast<unsigned char>(source[i])) || source[i] == '_')) {
                text += source[i];
                advance();
            }
            auto it = keywords().find(text);
            emit(it != keywords().end() ? it->second : Tok::Ident, std::move(text));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string text;
            while (i < source.size() && std::isdigit(static_cast<unsigned char>(source[i]))) {
                text += source[i];
                advance();
            }
            emit(Tok::Number, std::move(text));
            continue;
        }

        auto two = [&](char next) {
            return i + 1 < source.size() && source[i + 1] == next;
        };
        switch (c) {
            case ';': emit(Tok::Semi, ";"); advance(); continue;
            case ',': emit(Tok::Comma, ","); advance(); continue;
            case '.': emit(Tok::Dot, "."); advance(); continue;
            case '(': emit(Tok::LParen, "("); advance(); continue;
            case ')': emit(Tok::RParen, ")"); advance(); continue;
            case '=': emit(Tok::Eq, "="); advance(); continue;
            case '+': emit(Tok::Plus, "+"); advance(); continue;
            case '-': emit(Tok::Minus, "-"); advance(); continue;
            case '*': emit(Tok::Star, "*"); advance(); continue;
            case '[': emit(Tok::LBracket, "["); advance(); continue;
            case ']': emit(Tok::RBracket, "]"); advance(); continue;
            case '<':
                if (two(':')) {
                    emit(Tok::Subtype, "<:");
                    advance();
                    advance();
                    continue;
                }
                throw Error::at(Err::SyntaxError, tl, tc, "expected '<:' after '<'");
            case ':':
                if (two('=')) {
                    emit(Tok::Assign, ":=");
                    advance();
                    advance();
                    continue;
                }
                emit(Tok::Colon, ":");
                advance();
                continue;
            default:
                throw Error::at(Err::SyntaxError, tl, tc,
                                std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back(Token{Tok::Eof, "", line, col});
    return out;
}

} // namespace m3
