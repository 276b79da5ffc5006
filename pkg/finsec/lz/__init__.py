from finsec.lz.parse import ParseResult, TrieNode, lz78_parse
from finsec.lz.coding import lz78_encode, lz78_decode, lz78_length
from finsec.lz.coding import conditional_lz_encode, conditional_lz_decode
from finsec.lz.joint import JointParseResult, PhraseClassTable, joint_parse
from finsec.lz.joint import conditional_lz_length, classify_phrases, appendix_bound

__all__ = [
    "ParseResult",
    "TrieNode",
    "lz78_parse",
    "lz78_encode",
    "lz78_decode",
    "lz78_length",
    "conditional_lz_encode",
    "conditional_lz_decode",
    "JointParseResult",
    "PhraseClassTable",
    "joint_parse",
    "conditional_lz_length",
    "classify_phrases",
    "appendix_bound",
]
