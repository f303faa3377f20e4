"""Model interfaces, desk-scale reference implementations and remote clients."""
from .base import (GrammarChecker, LabelDistribution, MaskedContext, MaskedLanguageModel,
                   ModelEndpoint, ModelNotTrainedError, PerplexityScorer, PosTagger,
                   SimilarityScorer, VictimClassifier, VocabDistribution)
from .bayes import NaiveBayesVictim, train_reference_victim
from .grammar import RuleGrammarChecker
from .ngram import InfillTrigramModel, NgramPerplexity, UnigramPerplexity, train_reference_mlm
from .pos import LexiconTagger, load_lexicon
from .remote import RemoteError, RemoteProtocolError, remote_client
from .similarity import EmbeddingSimilarity, load_vectors, save_vectors

__all__ = [
    "EmbeddingSimilarity", "GrammarChecker", "InfillTrigramModel", "LabelDistribution",
    "LexiconTagger", "MaskedContext", "MaskedLanguageModel", "ModelEndpoint",
    "ModelNotTrainedError", "NaiveBayesVictim", "NgramPerplexity", "PerplexityScorer",
    "PosTagger", "RemoteError", "RemoteProtocolError", "RuleGrammarChecker",
    "SimilarityScorer", "UnigramPerplexity", "VictimClassifier", "VocabDistribution",
    "load_lexicon", "load_vectors", "remote_client", "save_vectors", "train_reference_mlm",
    "train_reference_victim",
]
