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
# cparser.py
#
# parser of the device configuration language
# ------------------------------------------------------------

from __future__ import annotations
from typing import Any

import ply.yacc as yacc

from ..log_system import ConfigErrorWithLog

from .pos_info import PosInfo
from .clexer import tokens, lexer
from . import ast


def _expect_field(p, index : int, name : str) -> None:
    if p[index] != name:
        raise ConfigErrorWithLog("Expected the field '" + name + "' but found '" + str(p[index]) + "'.",
            PosInfo(p.slice[index].lineno))

def _to_int(p, index : int) -> int:
    v = float(p[index])
    if not v.is_integer():
        raise ConfigErrorWithLog("Expected an integer but found '" + str(p[index]) + "'.",
            PosInfo(p.slice[index].lineno))
    return int(v)


def p_config(p):
    '''
    config  : device
            | device experiment
    '''
    if len(p) == 2:
        p[0] = ast.AstConfig(p[1].pos, p[1], None)
    else:
        p[0] = ast.AstConfig(p[1].pos, p[1], p[2])

def p_device(p):
    '''
    device  : DEVICE item_ls END
            | DEVICE END
    '''
    if len(p) == 4:
        p[0] = ast.AstDevice(PosInfo(p.slice[1].lineno), p[2])
    else:
        p[0] = ast.AstDevice(PosInfo(p.slice[1].lineno), [])

def p_item_ls(p):
    '''
    item_ls : item
            | item_ls item
    '''
    if len(p) == 2:
        p[0] = [p[1]]
    else:
        p[0] = p[1] + [p[2]]

def p_item(p):
    '''
    item    : source
            | rpeg
            | analysis
            | phase_offsets
            | error_params
    '''
    p[0] = p[1]

def p_source(p):
    '''
    source  : SOURCE NUM ':' ID '=' NUM NUM ',' ID '=' NUM ',' ID '=' NUM ';'
    '''
    _expect_field(p, 4, "xi")
    _expect_field(p, 9, "signal")
    _expect_field(p, 13, "idler")
    p[0] = ast.AstSource(PosInfo(p.slice[1].lineno), _to_int(p, 2),
        complex(float(p[6]), float(p[7])), _to_int(p, 11), _to_int(p, 15))

def p_rpeg(p):
    '''
    rpeg    : RPEG '=' ID ';'
    '''
    if p[3] not in ("fusion", "cz"):
        raise ConfigErrorWithLog("Unknown R-PEG mode '" + p[3] + "', expected 'fusion' or 'cz'.",
            PosInfo(p.slice[3].lineno))
    p[0] = ast.AstRpeg(PosInfo(p.slice[1].lineno), p[3])

def p_analysis(p):
    '''
    analysis    : ANALYSIS NUM ':' ID '=' NUM ',' ID '=' NUM ',' ID '=' NUM ';'
    '''
    _expect_field(p, 4, "phi_z")
    _expect_field(p, 8, "theta_y")
    _expect_field(p, 12, "monitor")
    p[0] = ast.AstAnalysis(PosInfo(p.slice[1].lineno), _to_int(p, 2),
        float(p[6]), float(p[10]), _to_int(p, 14))

def p_phase_offsets(p):
    '''
    phase_offsets   : PHASE_OFFSETS '=' '[' num_ls ']' ';'
                    | PHASE_OFFSETS '=' '[' ']' ';'
    '''
    if len(p) == 7:
        p[0] = ast.AstPhaseOffsets(PosInfo(p.slice[1].lineno), p[4])
    else:
        p[0] = ast.AstPhaseOffsets(PosInfo(p.slice[1].lineno), [])

def p_num_ls(p):
    '''
    num_ls  : NUM
            | num_ls NUM
            | num_ls ',' NUM
    '''
    if len(p) == 2:
        p[0] = [float(p[1])]
    else:
        p[0] = p[1] + [float(p[len(p)-1])]

def p_error_params(p):
    '''
    error_params    : ERROR ':' ID '=' NUM ',' ID '=' NUM ',' ID '=' NUM ';'
    '''
    _expect_field(p, 3, "sigma")
    _expect_field(p, 7, "p")
    _expect_field(p, 11, "delta")
    p[0] = ast.AstErrorParams(PosInfo(p.slice[1].lineno), float(p[5]), float(p[9]), float(p[13]))

def p_experiment(p):
    '''
    experiment  : EXPERIMENT entry_ls END
                | EXPERIMENT END
    '''
    if len(p) == 4:
        p[0] = ast.AstExperiment(PosInfo(p.slice[1].lineno), p[2])
    else:
        p[0] = ast.AstExperiment(PosInfo(p.slice[1].lineno), [])

def p_entry_ls(p):
    '''
    entry_ls    : entry
                | entry_ls entry
    '''
    if len(p) == 2:
        p[0] = [p[1]]
    else:
        p[0] = p[1] + [p[2]]

def p_entry(p):
    '''
    entry   : ID '=' value ';'
    '''
    p[0] = (p[1], p[3])

def p_value(p):
    '''
    value   : NUM
            | ID
            | STRING
            | '[' num_ls ']'
    '''
    if len(p) == 4:
        p[0] = p[2]
    elif p.slice[1].type == 'NUM':
        v = float(p[1])
        p[0] = int(v) if v.is_integer() and 'e' not in p[1].lower() and '.' not in p[1] else v
    elif p.slice[1].type == 'STRING':
        p[0] = p[1][1:-1]
    else:
        p[0] = p[1]

def p_error(p):
    if p is None:
        raise ConfigErrorWithLog("unexpected end of configuration")
    raise ConfigErrorWithLog("Syntax error in input: '" + str(p.value) + "'.", PosInfo(p.lineno))


# Build the parser
parser = yacc.yacc(debug = False, write_tables = False)


def parse(text : str, file : str = "<config>") -> ast.AstConfig:
    '''
    parse a configuration document into its syntax tree
    '''
    PosInfo.cur_file = file
    lexer.lineno = 1
    result : Any = parser.parse(text, lexer = lexer)
    if result is None:
        raise ConfigErrorWithLog("empty configuration")
    return result
