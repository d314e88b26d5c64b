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
# pos_info.py
#
# line positions inside configuration documents, for diagnostics
# ------------------------------------------------------------

from __future__ import annotations
from typing import ClassVar

from dataclasses import dataclass, field


@dataclass(frozen = True)
class PosInfo:
    '''
    a line of the document being parsed; the file is taken from `cur_file`, set by the parser
    '''
    cur_file : ClassVar[str] = "<config>"

    lineno : int
    file : str = field(default_factory = lambda : PosInfo.cur_file)

    @staticmethod
    def suffix(pos : PosInfo | None) -> str:
        '''
        the text appended to an error message, empty without a position
        '''
        return "" if pos is None else " (" + pos.file + ", line " + str(pos.lineno) + ")"
