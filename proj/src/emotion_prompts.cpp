#include "intentrag/distortion.hpp"

namespace intentrag {

// Default transformation prompts, one section per emotion. The humor entry is
// a placeholder: no source prompt exists for it.
const char* default_emotion_prompts() {
    return R"PROMPTS([sarcasm]
Sarcasm is when you write or say one thing but mean the opposite. This is clear through changing the writing patterns and style. It changes what you write denotatively without changing it connotatively. It is a covertly deceptive way to communicate. I will give you a statement written in a plain, matter-of-fact manner. I want you to convert it to be sarcastic. The overall meaning connotatively should stay the same, but the denotation should be different. Please do not make the sarcasm over the top. It should be subtle.

Statement:
{passage}

[irony]
1) Situational Irony: When there is a discrepancy between what is expected to happen and what actually occurs. For instance, a fire station burning down. 2) Dramatic Irony: When the audience knows something that the characters do not. For example, in a horror movie, the audience might know that the killer is hiding in the closet, while the character does not. I will provide you with a statement written in a plain, straightforward manner. Please rewrite it to introduce elements of irony. You may choose to add situational irony, dramatic irony, or both. For situational irony, ensure that the outcome is unexpected or opposite to what one would normally anticipate in the given context. For dramatic irony, create a scenario where the reader knows something that the characters in the passage do not. The overall connotative meaning should remain consistent, but the denotative expression should change to reflect irony.

Statement:
{passage}

[condescension]
Condescension is an attitude of superiority, where someone behaves or speaks in a way that implies they believe they are more important, knowledgeable, or intelligent than others. This often involves treating others as if they are less capable or deserving of respect. I will provide you with a statement written in a plain, straightforward manner. I want you to convert it to have condescension. The overall connotative meaning should remain consistent, but the denotative expression should change to reflect condescension. Please do not make the condescension over the top. It should be subtle.

Statement:
{passage}

[happiness]
Happiness is often described as a state of well-being characterized by feelings of joy, contentment, and fulfillment. I will provide you with a statement written in a plain, straightforward manner. Please rewrite it to reflect a subtly positive and content tone. The overall meaning should remain the same, but the expression should feel more optimistic and happy. Keep the tone balanced, without exaggeration.

Statement:
{passage}

[humor placeholder]
Humor is the quality of being amusing, often through wit, playful exaggeration, or an unexpected turn of phrase. I will provide you with a statement written in a plain, straightforward manner. I want you to convert it to be humorous. The overall connotative meaning should remain consistent, but the denotative expression should change to reflect humor. Please do not make the humor over the top. It should be subtle.

Statement:
{passage}

[sadness]
Sadness is often described as a state of feeling low, marked by moments of reflection and longing. It can bring about a deeper understanding of oneself and others, fostering growth and resilience through life's challenges. I will provide you with a statement written in a plain, straightforward manner. I want you to convert it to have sadness. The overall connotative meaning should remain consistent, but the denotative expression should change to reflect sadness. Please do not make the sadness over the top. It should be subtle.

Statement:
{passage}

[anger]
Anger is a powerful force, simmering beneath the surface, waiting to explode. It erupts when wrongs are done, threats are made, or injustices go unpunished, fueling a desire for retribution. I will give you a plain, neutral statement. Your task is to unleash the fury within it, turning the words into something that seethes with anger. The meaning must remain the same, but the language should burn with rage. Keep the anger fierce but not wild—controlled, yet unmistakably enraged.

Statement:
{passage}

[envy]
Envy is an emotional response that occurs when a person feels a desire for something that someone else has, whether it's a quality, achievement, possession, or status. It often involves feelings of resentment or longing because the envied person possesses something desirable that the envious person lacks. I will provide you with a statement written in a plain, straightforward manner. I want you to convert it to have envy. The overall connotative meaning should remain consistent, but the denotative expression should change to reflect envy. Please do not make the envy over the top. It should be subtle.

Statement:
{passage}

[surprise]
Surprise is that moment when everything you thought you knew suddenly turns upside down. It's the gasp of realization, the sharp intake of breath as something completely unexpected catches you off guard. I will give you a plain, neutral statement. Your task is to react to it as if it's astonishing, turning the words into something that conveys genuine shock. The meaning must remain the same, but your language should reflect how stunned and caught off-guard you are.

Statement:
{passage}

[excitement]
Excitement is a heightened state of energy and anticipation, often accompanied by feelings of joy and eagerness. It arises in response to positive or thrilling events, driving enthusiasm and a sense of adventure. I will provide you with a statement written in a plain, straightforward manner. I want you to convert it to have excitement. The overall connotative meaning should remain consistent, but the denotative expression should change to reflect excitement. Please do not make the excitement over the top. It should be subtle.

Statement:
{passage}

[fear]
Fear is a shadow, creeping into the mind, paralyzing every thought with terror. It looms when dangers lurk, unknowns emerge, or threats loom large, leaving you frozen in place. It takes hold of your actions, making you hesitate and second-guess, even when the path forward is clear. I will give you a plain, neutral statement. Your task is to transform it into something that shakes with fear, turning the words into a trembling expression of terror. The meaning must remain the same, but the language should be filled with overwhelming fear.

Statement:
{passage}

[disgust]
Disgust is a repellent force, festering under the skin, revolting at the mere sight or thought of something vile. It flares up when filth is encountered, when standards are trampled upon, or when something repugnant is tolerated, fueling a need to distance oneself from the contamination. I will give you a plain, neutral statement. Your task is to infect the words with repulsion, twisting the language until it oozes disgust. The meaning must remain the same, but the language should radiate repulsion and disdain.

Statement:
{passage}
)PROMPTS";
}

}  // namespace intentrag
