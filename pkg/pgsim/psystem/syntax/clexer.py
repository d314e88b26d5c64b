'''
 Copyright 2026 The PGSIM Authors
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

 http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
'''

# ------------------------------------------------------------
# clexer.py
#
# tokenizer of the device configuration language
# ------------------------------------------------------------

from __future__ import annotations

import ply.lex as lex

from ..log_system import ConfigErrorWithLog

from .pos_info import PosInfo


reserved = {
    # blocks
    'device'    : 'DEVICE',
    'experiment'    : 'EXPERIMENT',
    'end'   : 'END',

    # device items
    'source'    : 'SOURCE',
    'rpeg'  : 'RPEG',
    'analysis'  : 'ANALYSIS',
    'phase_offsets' : 'PHASE_OFFSETS',
    'error' : 'ERROR',
}

# List of token names.
tokens = [
    'ID',
    'NUM',
    'STRING',
 ] + list(reserved.values())

literals = [',', ';', ':', '=', '[', ']']


def t_STRING(t):
    r'"[^"\n]*"'
    return t

# use // or /* */ to comment
def t_COMMENT(t):
    r'(/\*(.|\n)*?\*/)|(//.*)'
    for c in t.value:
        if c == '\n':
            t.lexer.lineno += 1

def t_ID(t):
    r'[a-zA-Z_][a-zA-Z_0-9]*'
    t.type = reserved.get(t.value,'ID')    # Check for reserved words
    return t

def t_NUM(t):
    r'(\+|-)?((\d+\.\d*)|(\.\d+)|\d+)([Ee](\+|-)?\d+)?'
    try:
        # test the transform
        float(t.value)
    except ValueError:
        raise ConfigErrorWithLog("Syntax Error. Illegal number '" + t.value + "'.", PosInfo(t.lineno))
    return t

# Define a rule so we can track line numbers
def t_newline(t):
    r'\n+'
    t.lexer.lineno += len(t.value)


# A string containing ignored characters (spaces and tabs)
t_ignore = ' \t\r'


def t_error(t):
    raise ConfigErrorWithLog("Syntax Error. Illegal character '" + t.value[0] + "'.", PosInfo(t.lineno))


# Build the lexer
lexer = lex.lex()
